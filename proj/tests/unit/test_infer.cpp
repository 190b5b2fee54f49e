#include "spt/error.hpp"
#include "spt/infer.hpp"
#include "spt/sim.hpp"

#include "../fixtures/fixtures.hpp"
#include "../oracles.hpp"

#include <doctest.h>

#include <random>

using namespace spt;

namespace {

InferenceConfig small_config(int B = 100) {
    InferenceConfig cfg;
    cfg.B = B;
    cfg.seed = 17;
    return cfg;
}

Dataset dgp1(std::uint64_t seed, int cell_n = 50) {
    DgpSpec spec;
    spec.cell_n = cell_n;
    return generate_dataset(spec, seed);
}

// TWFE means for 4 units over 5 periods, repeated 500 times per cell.
RcsDataset exact_twfe() {
    Vector lambda(5);
    lambda << 0, 1, 0.5, 2, 3;
    Vector gamma(4);
    gamma << 0, 2, -1, 4;
    return fixture::exact_rcs(twfe_population_stats(lambda, gamma).means, 4, 500);
}

}  // namespace

TEST_CASE("config validation") {
    InferenceConfig cfg;
    CHECK_NOTHROW(validate_config(cfg));
    auto rejects = [](InferenceConfig c) {
        try {
            validate_config(c);
        } catch (const Error& e) {
            return e.code() == ErrorCode::InvalidArgument;
        }
        return false;
    };
    cfg.eta = 0.5;
    CHECK(rejects(cfg));
    cfg = {};
    cfg.alpha = 1.0;
    CHECK(rejects(cfg));
    cfg = {};
    cfg.varsigma = 0.0;
    CHECK(rejects(cfg));
    cfg = {};
    cfg.grid = GridSpec{0, 1, 1};
    CHECK(rejects(cfg));
    cfg = {};
    cfg.B = 0;
    CHECK(rejects(cfg));
}

TEST_CASE("step size") {
    CHECK(step_size(10000, 0.25) == doctest::Approx(0.1));
}

TEST_CASE("moment vector: examples and Kronecker oracle") {
    Matrix A(2, 2);
    A << 1, 3, 2, 4;
    SimplexPoint w{Vector::Constant(2, 0.5)};
    const Vector b = A * w.w;
    CHECK(moment_vector(w, A, b, 0.0).norm() == 0.0);

    Matrix col(3, 1);
    col << 1, 2, 3;
    const Vector m = moment_vector(SimplexPoint{Vector::Ones(1)}, col, col.col(0), 5.0);
    CHECK(m(0) == 0.0);
    CHECK(m(1) == 0.0);
    CHECK(m(2) == 5.0);

    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 100; ++rep) {
        const Index T0 = 1 + rep % 5;
        const int d = 1 + rep % 4;
        const Matrix R = oracle::normal_matrix(T0, d, rng);
        const Vector r = oracle::normal_vector(T0, rng);
        const Vector ww = oracle::dirichlet(d, rng);
        const double tau = oracle::normal_vector(1, rng, 3.0)(0);
        const Vector got = moment_vector(SimplexPoint{ww}, R, r, tau);
        CHECK((got - oracle::kronecker_moment(R, r, ww, tau)).norm() <= 1e-12 * (1 + got.norm()));
    }

    try {
        moment_vector(SimplexPoint{Vector::Ones(3)}, A, b, 0.0);
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
}

TEST_CASE("profiled criterion on the segment system") {
    const TrendSystem ts = fixture::segment();
    const InferenceConfig cfg;
    for (double tau : {0.0, 0.25, 0.5, 1.0}) CHECK(profiled_criterion(ts, tau, cfg).Q_hat <= 1e-14);
    CHECK(profiled_criterion(ts, -0.5, cfg).Q_hat > 1e-3);
    CHECK(profiled_criterion(ts, 1.5, cfg).Q_hat > 1e-3);
    // Far outside, the pre-trend equation is given up too: w = (1, 0, 0)
    // leaves residuals (-1, 8), so Q = 65 rather than the 81 of an exact pre fit.
    const CriterionEval far = profiled_criterion(ts, 10.0, cfg);
    CHECK(far.Q_hat == doctest::Approx(65.0).epsilon(1e-10));
    CHECK(far.statistic == far.Q_hat);  // n = 1
    const auto [grid_min, arg] = oracle::simplex_grid_min(3, 1e-3, [&](const Vector& w) { return moment_vector(SimplexPoint{w}, ts.A, ts.b, 10.0).squaredNorm(); });
    CHECK(far.Q_hat <= grid_min + 1e-12);
    CHECK(grid_min == doctest::Approx(65.0));
}

TEST_CASE("profiled criterion: statistic scaling and population TWFE") {
    TrendSystem ts = fixture::segment();
    ts.n = 400;
    const CriterionEval e = profiled_criterion(ts, 3.0, InferenceConfig{});
    CHECK(e.statistic == doctest::Approx(20.0 * e.Q_hat).epsilon(1e-12));

    std::mt19937_64 rng(2);
    const TrendSystem twfe = fixture::twfe(oracle::normal_vector(6, rng), oracle::normal_vector(5, rng), 5);
    CHECK(profiled_criterion(twfe, 0.0, InferenceConfig{}).Q_hat <= 1e-20);
}

TEST_CASE("profiled criterion is convex along a grid") {
    const Dataset d = dgp1(3);
    const TrendSystem ts = build_trend_system(d);
    const InferenceConfig cfg;
    std::vector<double> q;
    for (int i = 0; i <= 80; ++i) q.push_back(profiled_criterion(ts, -2.0 + 0.05 * i, cfg).Q_hat);
    for (std::size_t i = 1; i + 1 < q.size(); ++i) CHECK(q[i - 1] - 2 * q[i] + q[i + 1] >= -1e-9);
}

TEST_CASE("unit multipliers give zero critical values") {
    const Dataset d = dgp1(4);
    InferenceConfig cfg = small_config();
    cfg.unit_multipliers = true;
    const TrendSystem ts = build_trend_system(d);
    CHECK(bootstrap_critical_value(d, ts, 0.3, cfg) == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
    const BootstrapEnsemble ens(d, ts, cfg);
    for (double phi : bootstrap_derivatives(ens, 0.3, cfg)) CHECK(std::abs(phi) <= 1e-6);
}

TEST_CASE("ensemble: perturbed system and objective consistency") {
    const Dataset d = dgp1(5);
    const TrendSystem ts = build_trend_system(d);
    const InferenceConfig cfg = small_config(100);
    const BootstrapEnsemble ens(d, ts, cfg);
    CHECK(ens.size() == 100);
    CHECK(ens.s() == doctest::Approx(std::pow(static_cast<double>(ts.n), -0.25)));
    std::mt19937_64 rng(6);
    const Vector w = oracle::dirichlet(ts.controls(), rng);
    Vector target = ens.perturbed_b(3);
    target(target.size() - 1) -= 0.7;
    CHECK(convex_perturbed_objective(ens, 3, w, 0.7) == doctest::Approx((ens.perturbed_A(3) * w - target).squaredNorm()));
    // With s = 1/sqrt(n) both objectives reduce to the bootstrap moments.
    const double s = 1.0 / ens.root_n();
    Vector tb = ens.b_boot(3);
    tb(tb.size() - 1) -= 0.7;
    const double boot = (ens.A_boot(3) * w - tb).squaredNorm();
    CHECK(convex_perturbed_objective(ens, 3, w, 0.7, s) == doctest::Approx(boot));
    CHECK(literal_perturbed_objective(ens, 3, w, 0.7, s) == doctest::Approx(boot));
}

TEST_CASE("ensemble draws do not depend on the worker count") {
    const Dataset d = dgp1(7);
    const TrendSystem ts = build_trend_system(d);
    InferenceConfig one = small_config(100);
    InferenceConfig many = one;
    many.threads = 4;
    const BootstrapEnsemble a(d, ts, one);
    const BootstrapEnsemble b(d, ts, many);
    for (int r = 0; r < 100; ++r) {
        CHECK(a.A_boot(r) == b.A_boot(r));
        CHECK(a.b_boot(r) == b.b_boot(r));
    }
}

TEST_CASE("critical values inside the effect set are nonnegative") {
    // n = 8 units x 10 periods x 150 rows = 12000
    int nonneg = 0;
    const int seeds = 100;
    for (int seed = 0; seed < seeds; ++seed) {
        const Dataset d = dgp1(static_cast<std::uint64_t>(100 + seed), 150);
        const TrendSystem ts = build_trend_system(d);
        const IdentifiedInterval e = effect_set(convex_trend_bounds(ts), ts);
        const double tau = e.kind == IdentifiedInterval::Kind::Empty ? 0.0 : 0.5 * (e.lo + e.hi);
        InferenceConfig cfg = small_config(100);
        cfg.seed = static_cast<std::uint64_t>(seed);
        if (bootstrap_critical_value(d, ts, tau, cfg) >= 0.0) ++nonneg;
    }
    CHECK(nonneg >= 99);
}

TEST_CASE("confidence set: population-exact data accepts the true effect") {
    const Dataset d = exact_twfe();
    InferenceConfig cfg = small_config();
    cfg.grid = GridSpec{-1.0, 1.0, 21};
    const ConfidenceSet cs = confidence_set(d, cfg);
    REQUIRE(cs.grid.size() == 21);
    CHECK(cs.grid[10].tau == doctest::Approx(0.0));
    CHECK(cs.grid[10].accepted);
    CHECK(cs.grid[10].statistic <= 1e-12);
    CHECK_FALSE(cs.grid[9].accepted);
    CHECK_FALSE(cs.grid[11].accepted);
    CHECK(cs.intervals.size() == 1);
    CHECK_FALSE(cs.truncated_lo);
    CHECK_FALSE(cs.truncated_hi);
}

TEST_CASE("confidence set: flags, intervals and echo are consistent") {
    const Dataset d = dgp1(8);
    InferenceConfig cfg = small_config();
    cfg.default_grid_count = 41;
    const ConfidenceSet cs = confidence_set(d, cfg);
    CHECK(cs.grid.size() == 41);
    for (const auto& c : cs.grid) CHECK(c.accepted == (c.statistic <= c.critical_value + cfg.varsigma));
    CHECK(cs.intervals == accepted_runs(cs.grid));
    CHECK(cs.B == cfg.B);
    CHECK(cs.seed == cfg.seed);
    CHECK(cs.n == sample_size(d));
    CHECK_FALSE(cs.truncated_lo);
    CHECK_FALSE(cs.truncated_hi);
}

TEST_CASE("confidence set is bitwise identical across runs and worker counts") {
    const Dataset d = dgp1(9);
    InferenceConfig cfg = small_config();
    cfg.default_grid_count = 30;
    const ConfidenceSet a = confidence_set(d, cfg);
    const ConfidenceSet b = confidence_set(d, cfg);
    cfg.threads = 3;
    const ConfidenceSet c = confidence_set(d, cfg);
    REQUIRE(a.grid.size() == c.grid.size());
    for (std::size_t i = 0; i < a.grid.size(); ++i) {
        for (const ConfidenceSet* o : {&b, &c}) {
            CHECK(a.grid[i].tau == o->grid[i].tau);
            CHECK(a.grid[i].statistic == o->grid[i].statistic);
            CHECK(a.grid[i].critical_value == o->grid[i].critical_value);
            CHECK(a.grid[i].accepted == o->grid[i].accepted);
        }
    }
}

TEST_CASE("rejecting every grid point gives an empty set") {
    const Dataset d = exact_twfe();
    InferenceConfig cfg = small_config();
    cfg.grid = GridSpec{5.0, 6.0, 11};
    const ConfidenceSet cs = confidence_set(d, cfg);
    CHECK(cs.empty());
    CHECK(cs.total_length() == 0.0);
}

TEST_CASE("screened decisions match exhaustive evaluation") {
    for (auto variant : {DgpVariant::RcsPt, DgpVariant::RcsPostViolation, DgpVariant::PanelSparseRelevant}) {
        DgpSpec spec;
        spec.variant = variant;
        spec.cell_n = 40;
        if (variant == DgpVariant::PanelSparseRelevant) spec.K = 12;
        const Dataset d = generate_dataset(spec, 21);
        const TrendSystem ts = build_trend_system(d);
        InferenceConfig cfg = small_config();
        const BootstrapEnsemble ens(d, ts, cfg);
        const std::vector<double> taus = grid_points(default_grid(d, ts, 60));
        const auto exact = test_candidates(ens, taus, cfg);
        cfg.screen = true;
        const auto screened = test_candidates(ens, taus, cfg);
        REQUIRE(exact.size() == screened.size());
        for (std::size_t g = 0; g < taus.size(); ++g) {
            CHECK(exact[g].accepted == screened[g].accepted);
            CHECK(exact[g].statistic == screened[g].statistic);
            if (!std::isnan(screened[g].critical_value)) CHECK(screened[g].critical_value == doctest::Approx(exact[g].critical_value).epsilon(1e-9));
        }
    }
}

TEST_CASE("literal perturbation runs and agrees on clear-cut candidates") {
    const Dataset d = dgp1(10);
    InferenceConfig cfg = small_config();
    cfg.perturbation = Perturbation::Literal;
    cfg.literal_starts = 4;
    const TrendSystem ts = build_trend_system(d);
    const BootstrapEnsemble ens(d, ts, cfg);
    const auto far = test_candidates(ens, {-50.0, 50.0}, cfg);
    CHECK_FALSE(far[0].accepted);
    CHECK_FALSE(far[1].accepted);
}

TEST_CASE("feasibility test: population-exact feasible system") {
    const Dataset d = exact_twfe();
    const FeasibilityTestResult r = feasibility_test(d, small_config());
    CHECK(r.statistic <= 1e-12);
    CHECK_FALSE(r.reject);
    CHECK(r.reject == (r.statistic > r.critical_value));
    CHECK(r.p_value_proxy >= 0.0);
    CHECK(r.p_value_proxy <= 1.0);
}

TEST_CASE("feasibility test: hull violation rejects") {
    DgpSpec spec;
    spec.cell_n = 50;
    spec.pre_shift = 10.0 * spec.sigma;
    const FeasibilityTestResult r = feasibility_test(generate_dataset(spec, 11), small_config());
    CHECK(r.reject);
    CHECK(r.reject == (r.statistic > r.critical_value));
}

TEST_CASE("quantile of 1..100 at 0.95") {
    std::vector<double> v(100);
    for (int i = 0; i < 100; ++i) v[static_cast<std::size_t>(i)] = i + 1;
    CHECK(quantile_type7(v, 0.95) == doctest::Approx(95.05));
}
