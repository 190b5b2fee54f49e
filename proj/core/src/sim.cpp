#include "spt/sim.hpp"

#include "spt/error.hpp"
#include "spt/parallel.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace spt {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Vector random_walk(int T, double step_sd, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, step_sd);
    Vector x(T);
    x(0) = 0.0;
    for (int t = 1; t < T; ++t) x(t) = x(t - 1) + z(rng);
    return x;
}

Vector dirichlet(int d, std::mt19937_64& rng) {
    std::exponential_distribution<double> e(1.0);
    Vector w(d);
    for (int i = 0; i < d; ++i) w(i) = e(rng);
    return w / w.sum();
}

Vector normals(int d, double sd, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, sd);
    Vector v(d);
    for (int i = 0; i < d; ++i) v(i) = z(rng);
    return v;
}

// Controls' means from a rank-r factor model: the first factor is a common
// time effect with unit loading; the post-period row of the remaining factors
// is a convex combination of pre-period rows. Rows 1..K-1 are filled.
void low_rank_controls(const DgpSpec& spec, Matrix& means, std::mt19937_64& rng) {
    const int r = spec.rank;
    Matrix F(spec.T, r);
    F.col(0) = random_walk(spec.T, 0.5, rng);
    for (int f = 1; f < r; ++f) {
        F.col(f).head(spec.T0) = normals(spec.T0, 1.0, rng);
        for (int t = spec.T0; t < spec.T; ++t) F(t, f) = 0.0;
    }
    for (int t = spec.T0; t < spec.T; ++t) {
        const Vector mix = dirichlet(spec.T0, rng);
        for (int f = 1; f < r; ++f) F(t, f) = F.col(f).head(spec.T0).dot(mix);
    }
    Matrix L(spec.K, r);
    L.col(0).setOnes();
    for (int f = 1; f < r; ++f) L.col(f) = normals(spec.K, 0.5, rng);
    const Vector gamma = normals(spec.K, 0.5, rng);
    for (int k = 1; k < spec.K; ++k)
        for (int t = 0; t < spec.T; ++t) means(k, t) = F.row(t).dot(L.row(k)) + gamma(k);
}

Dataset sample_rcs(const DgpSpec& spec, const PopulationDesign& pop, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    RcsDataset d;
    d.K = spec.K;
    d.T = spec.T;
    d.T0 = spec.T0;
    const auto rows = static_cast<std::size_t>(spec.K) * static_cast<std::size_t>(spec.T) * static_cast<std::size_t>(spec.cell_n);
    d.outcome.resize(static_cast<Index>(rows));
    d.unit.reserve(rows);
    d.period.reserve(rows);
    Index i = 0;
    for (int k = 0; k < spec.K; ++k) {
        for (int t = 0; t < spec.T; ++t) {
            for (int j = 0; j < spec.cell_n; ++j) {
                d.outcome(i++) = pop.means(k, t) + pop.cell_sd(k, t) * z(rng);
                d.unit.push_back(k);
                d.period.push_back(t);
            }
        }
    }
    for (int k = 0; k < spec.K; ++k) d.unit_labels.push_back(std::to_string(k + 1));
    for (int t = 0; t < spec.T; ++t) d.period_labels.push_back(std::to_string(t + 1));
    return d;
}

Dataset sample_panel(const DgpSpec& spec, const PopulationDesign& pop, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(pop.covariance);
    const Matrix root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    PanelDataset d;
    d.K = spec.K;
    d.T = spec.T;
    d.T0 = spec.T0;
    const auto n = static_cast<Index>(spec.K) * spec.cell_n;
    d.outcomes.resize(n, spec.T);
    Vector draw(spec.T);
    Index i = 0;
    for (int k = 0; k < spec.K; ++k) {
        for (int j = 0; j < spec.cell_n; ++j) {
            for (int t = 0; t < spec.T; ++t) draw(t) = z(rng);
            d.outcomes.row(i++) = pop.means.row(k) + (root * draw).transpose();
            d.unit.push_back(k);
            d.ids.push_back(std::to_string(k + 1) + "-" + std::to_string(j + 1));
        }
    }
    for (int k = 0; k < spec.K; ++k) d.unit_labels.push_back(std::to_string(k + 1));
    for (int t = 0; t < spec.T; ++t) d.period_labels.push_back(std::to_string(t + 1));
    return d;
}

// Cell statistics with `order` giving the rows (units) to keep, first = treated.
CellStats select_units(const CellStats& stats, const std::vector<int>& order) {
    CellStats s;
    s.design = stats.design;
    s.K = static_cast<int>(order.size());
    s.T = stats.T;
    s.means.resize(s.K, s.T);
    s.counts.resize(s.K, s.T);
    s.shares.resize(s.K, s.T);
    for (int i = 0; i < s.K; ++i) {
        s.means.row(i) = stats.means.row(order[static_cast<std::size_t>(i)]);
        s.counts.row(i) = stats.counts.row(order[static_cast<std::size_t>(i)]);
        s.shares.row(i) = stats.shares.row(order[static_cast<std::size_t>(i)]);
    }
    s.n_total = s.counts.sum();
    return s;
}

double method_estimate(const CellStats& stats, int T0, PlaceboMethod method, std::optional<double> zeta) {
    if (method == PlaceboMethod::Sc) return sc_estimate(stats, sc_weights(stats, T0));
    return sdid_estimate(stats, sdid_weights(stats, T0, zeta));
}

double mean_of(const std::vector<double>& x) {
    return x.empty() ? 0.0 : pairwise_sum(x) / static_cast<double>(x.size());
}

}  // namespace

std::string_view to_string(DgpVariant v) {
    switch (v) {
        case DgpVariant::RcsPt: return "rcs_pt";
        case DgpVariant::RcsPostViolation: return "rcs_post_violation";
        case DgpVariant::PanelLowRank: return "panel_low_rank";
        case DgpVariant::PanelSparseRelevant: return "panel_sparse_relevant";
    }
    return "unknown";
}

DgpVariant parse_dgp(std::string_view name) {
    for (auto v : {DgpVariant::RcsPt, DgpVariant::RcsPostViolation, DgpVariant::PanelLowRank, DgpVariant::PanelSparseRelevant})
        if (to_string(v) == name) return v;
    throw Error(ErrorCode::InvalidSpec, "unknown DGP '" + std::string(name) + "'");
}

void validate(const DgpSpec& spec) {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); };
    if (spec.K < 3) fail("K must be at least 3");
    if (spec.T0 < 2 || spec.T0 >= spec.T) fail("need 2 <= T0 < T");
    if (spec.cell_n < 2) fail("cell_n must be at least 2");
    if (!(spec.sigma >= 0.0)) fail("sigma must be nonnegative");
    if (spec.violation && !std::isfinite(*spec.violation)) fail("violation must be finite");
    if (!(spec.violation_mix > 0.0 && spec.violation_mix <= 1.0)) fail("violation_mix must lie in (0, 1]");
    if (spec.rank < 1 || spec.rank > spec.T) fail("rank must lie in [1, T]");
    if (!(std::abs(spec.ar2) < 1.0 && spec.ar2 + spec.ar1 < 1.0 && spec.ar2 - spec.ar1 < 1.0)) fail("AR(2) coefficients are not stationary");
    if (spec.variant == DgpVariant::PanelSparseRelevant && (spec.relevant < 1 || spec.relevant > spec.K - 2))
        fail("relevant donors must number between 1 and K - 2");
    if (!std::isfinite(spec.post_shift) || !std::isfinite(spec.pre_shift)) fail("shifts must be finite");
}

Matrix factor_means(const FactorModelSpec& f) {
    if (f.lambda.cols() != f.gamma.cols()) throw Error(ErrorCode::InvalidSpec, "factor dimensions differ");
    Matrix means = f.gamma * f.lambda.transpose();
    if (f.treatment_effects.size() > 0) {
        if (f.treatment_effects.rows() != means.rows() || f.treatment_effects.cols() != means.cols())
            throw Error(ErrorCode::InvalidSpec, "treatment effects must be K x T");
        means += f.treatment_effects;
    }
    return means;
}

Matrix ar2_covariance(int T, double phi1, double phi2, double sigma) {
    std::vector<double> rho(static_cast<std::size_t>(std::max(T, 2)));
    rho[0] = 1.0;
    rho[1] = phi1 / (1.0 - phi2);
    for (std::size_t k = 2; k < rho.size(); ++k) rho[k] = phi1 * rho[k - 1] + phi2 * rho[k - 2];
    Matrix S(T, T);
    for (int i = 0; i < T; ++i)
        for (int j = 0; j < T; ++j) S(i, j) = sigma * sigma * rho[static_cast<std::size_t>(std::abs(i - j))];
    return S;
}

double analytic_did_se(const DgpSpec& spec) {
    const double n = spec.cell_n;
    const double nc = static_cast<double>(spec.K - 1) * n;
    if (spec.variant == DgpVariant::RcsPt || spec.variant == DgpVariant::RcsPostViolation)
        return spec.sigma * std::sqrt(2.0 / n + 2.0 / nc);
    const Matrix S = ar2_covariance(spec.T, spec.ar1, spec.ar2, spec.sigma);
    const int pre = spec.T0 - 1;
    const int post = spec.T - 1;
    const double v = S(post, post) + S(pre, pre) - 2.0 * S(post, pre);
    return std::sqrt(v / n + v / nc);
}

PopulationDesign population_design(const DgpSpec& spec) {
    validate(spec);
    std::mt19937_64 rng(spec.design_seed);
    PopulationDesign pop;
    pop.means = Matrix::Zero(spec.K, spec.T);
    const int controls = spec.K - 1;
    const int post = spec.T - 1;

    switch (spec.variant) {
        case DgpVariant::RcsPt: {
            const Vector lambda = random_walk(spec.T, 0.5, rng);
            const Vector gamma = normals(spec.K, 1.0, rng);
            const Vector f = normals(spec.T, 0.5, rng);
            const Vector l = normals(spec.K, 1.0, rng);
            for (int k = 1; k < spec.K; ++k)
                for (int t = 0; t < spec.T; ++t) pop.means(k, t) = lambda(t) + gamma(k) + f(t) * l(k);
            // Equal cell sizes make the control shares uniform.
            pop.omega = Vector::Constant(controls, 1.0 / controls);
            for (int t = 0; t < spec.T; ++t) pop.means(0, t) = gamma(0) + pop.means.col(t).tail(controls).dot(pop.omega);
            break;
        }
        case DgpVariant::RcsPostViolation: {
            const Vector lambda = random_walk(spec.T, 0.5, rng);
            const Vector gamma = normals(spec.K, 1.0, rng);
            for (int k = 0; k < spec.K; ++k)
                for (int t = 0; t < spec.T; ++t) pop.means(k, t) = lambda(t) + gamma(k);
            const double violation = spec.violation ? *spec.violation : 1.1 * 1.96 * analytic_did_se(spec);
            const double spread = violation / spec.violation_mix;
            const Vector m = Vector::LinSpaced(controls, -spread, spread);
            Vector omega = (1.0 - spec.violation_mix) * Vector::Constant(controls, 1.0 / controls);
            omega(controls - 1) += spec.violation_mix;
            pop.means.col(post).tail(controls) += m;
            pop.means(0, post) += omega.dot(m);
            pop.omega = omega;
            break;
        }
        case DgpVariant::PanelLowRank: {
            low_rank_controls(spec, pop.means, rng);
            pop.omega = dirichlet(controls, rng);
            const double intercept = normals(1, 0.5, rng)(0);
            for (int t = 0; t < spec.T; ++t) pop.means(0, t) = intercept + pop.means.col(t).tail(controls).dot(pop.omega);
            break;
        }
        case DgpVariant::PanelSparseRelevant: {
            low_rank_controls(spec, pop.means, rng);
            std::vector<int> donors(static_cast<std::size_t>(controls));
            std::iota(donors.begin(), donors.end(), 1);
            std::shuffle(donors.begin(), donors.end(), rng);
            std::vector<int> relevant(donors.begin(), donors.begin() + spec.relevant);
            pop.omega = Vector::Zero(controls);
            for (int k : relevant) pop.omega(k - 1) = 1.0 / spec.relevant;
            for (int t = 0; t < spec.T; ++t) pop.means(0, t) = pop.means.col(t).tail(controls).dot(pop.omega);
            for (int k = 1; k < spec.K; ++k) {
                if (pop.omega(k - 1) > 0.0) continue;
                pop.means.row(k) = pop.means.row(0);
                pop.means(k, post) += spec.post_shift;
            }
            break;
        }
    }

    if (spec.pre_shift != 0.0) {
        for (int t = 0; t < spec.T; ++t) pop.means(0, t) += spec.pre_shift * std::min(t, spec.T0 - 1);
    }

    if (spec.variant == DgpVariant::RcsPt || spec.variant == DgpVariant::RcsPostViolation) {
        pop.design = Design::Rcs;
        pop.cell_sd = Matrix::Constant(spec.K, spec.T, spec.sigma);
    } else {
        pop.design = Design::Panel;
        pop.covariance = ar2_covariance(spec.T, spec.ar1, spec.ar2, spec.sigma);
    }
    return pop;
}

Dataset sample_dataset(const DgpSpec& spec, const PopulationDesign& pop, std::uint64_t seed) {
    validate(spec);
    return pop.design == Design::Rcs ? sample_rcs(spec, pop, seed) : sample_panel(spec, pop, seed);
}

Dataset generate_dataset(const DgpSpec& spec, std::uint64_t seed) {
    return sample_dataset(spec, population_design(spec), seed);
}

CellStats twfe_population_stats(const Vector& lambda, const Vector& gamma) {
    if (!lambda.allFinite() || !gamma.allFinite()) throw Error(ErrorCode::NonFiniteInput, "TWFE effects");
    Matrix means(gamma.size(), lambda.size());
    for (Index k = 0; k < gamma.size(); ++k)
        for (Index t = 0; t < lambda.size(); ++t) means(k, t) = lambda(t) + gamma(k);
    return population_stats(means);
}

PlaceboCi placebo_ci(const CellStats& stats, int T0, PlaceboMethod method, std::optional<double> zeta) {
    if (stats.K < 3) throw Error(ErrorCode::DegenerateShape, "placebo inference needs at least two controls");
    PlaceboCi ci;
    ci.estimate = method_estimate(stats, T0, method, zeta);
    std::vector<double> placebo;
    for (int j = 1; j < stats.K; ++j) {
        std::vector<int> order{j};
        for (int k = 1; k < stats.K; ++k)
            if (k != j) order.push_back(k);
        placebo.push_back(method_estimate(select_units(stats, order), T0, method, zeta));
    }
    const double m = mean_of(placebo);
    std::vector<double> sq(placebo.size());
    for (std::size_t i = 0; i < placebo.size(); ++i) sq[i] = (placebo[i] - m) * (placebo[i] - m);
    ci.se = std::sqrt(mean_of(sq));
    ci.lo = ci.estimate - 1.96 * ci.se;
    ci.hi = ci.estimate + 1.96 * ci.se;
    return ci;
}

McReport run_monte_carlo(const DgpSpec& spec, const McConfig& cfg) {
    validate(spec);
    if (cfg.reps < 10) throw Error(ErrorCode::InvalidArgument, "reps must be at least 10");
    const PopulationDesign pop = population_design(spec);

    InferenceConfig icfg;
    icfg.alpha = cfg.alpha;
    icfg.B = cfg.B;
    icfg.eta = cfg.eta;
    icfg.varsigma = cfg.varsigma;
    icfg.default_grid_count = cfg.grid_n;
    icfg.threads = 1;
    icfg.screen = true;  // only accept/reject decisions are summarized
    validate_config(icfg);

    McReport report;
    report.spec = spec;
    report.config = cfg;
    report.reps = cfg.reps;
    report.records.resize(static_cast<std::size_t>(cfg.reps));
    std::vector<std::array<double, 4>> timing(static_cast<std::size_t>(cfg.reps));

    parallel_for(static_cast<std::size_t>(cfg.reps), cfg.threads, [&](std::size_t i) {
        RepRecord& rec = report.records[i];
        rec.rep = static_cast<int>(i) + 1;
        rec.seed = derive_seed(cfg.seed, i + 1);
        const Dataset data = sample_dataset(spec, pop, derive_seed(rec.seed, 1));
        const CellStats stats = cell_means(data);
        auto& tm = timing[i];

        auto start = Clock::now();
        const DidResult did = did_estimate(data);
        rec.did_estimate = did.estimate;
        rec.did_lo = did.ci_lo;
        rec.did_hi = did.ci_hi;
        tm[0] = seconds_since(start);

        start = Clock::now();
        const PlaceboCi sc = placebo_ci(stats, spec.T0, PlaceboMethod::Sc);
        rec.sc_estimate = sc.estimate;
        rec.sc_lo = sc.lo;
        rec.sc_hi = sc.hi;
        tm[1] = seconds_since(start);

        start = Clock::now();
        const PlaceboCi sdid = placebo_ci(stats, spec.T0, PlaceboMethod::Sdid);
        rec.sdid_estimate = sdid.estimate;
        rec.sdid_lo = sdid.lo;
        rec.sdid_hi = sdid.hi;
        tm[2] = seconds_since(start);

        start = Clock::now();
        InferenceConfig local = icfg;
        local.seed = derive_seed(rec.seed, 2);
        const ConfidenceSetWithProbes res = confidence_set_with_probes(data, local, {0.0});
        rec.spt_covers = res.probes.front().accepted;
        rec.spt_empty = res.cs.empty();
        rec.spt_truncated = res.cs.truncated_lo || res.cs.truncated_hi;
        if (!rec.spt_empty) {
            rec.spt_lo = res.cs.intervals.front().first;
            rec.spt_hi = res.cs.intervals.back().second;
        }
        rec.spt_length = res.cs.total_length();
        if (cfg.feasibility) rec.feasibility_reject = feasibility_test(data, local).reject;
        tm[3] = seconds_since(start);
    });

    const auto reps = static_cast<std::size_t>(cfg.reps);
    auto summarize = [&](auto estimate, auto lo, auto hi, int method) {
        std::vector<double> est(reps), len(reps), cover(reps), secs(reps);
        for (std::size_t i = 0; i < reps; ++i) {
            const RepRecord& r = report.records[i];
            est[i] = estimate(r);
            len[i] = hi(r) - lo(r);
            cover[i] = (lo(r) <= 0.0 && 0.0 <= hi(r)) ? 1.0 : 0.0;
            secs[i] = timing[i][static_cast<std::size_t>(method)];
        }
        MethodSummary s;
        s.bias = mean_of(est);
        s.ci_length = mean_of(len);
        s.coverage = mean_of(cover);
        if (cfg.record_timing) s.runtime_seconds = pairwise_sum(secs);
        return s;
    };
    report.did = summarize([](const RepRecord& r) { return r.did_estimate; }, [](const RepRecord& r) { return r.did_lo; },
                           [](const RepRecord& r) { return r.did_hi; }, 0);
    report.sc = summarize([](const RepRecord& r) { return r.sc_estimate; }, [](const RepRecord& r) { return r.sc_lo; },
                          [](const RepRecord& r) { return r.sc_hi; }, 1);
    report.sdid = summarize([](const RepRecord& r) { return r.sdid_estimate; }, [](const RepRecord& r) { return r.sdid_lo; },
                            [](const RepRecord& r) { return r.sdid_hi; }, 2);

    std::vector<double> mid, len, cover, secs(reps);
    int rejections = 0;
    for (std::size_t i = 0; i < reps; ++i) {
        const RepRecord& r = report.records[i];
        if (!r.spt_empty) mid.push_back(0.5 * (r.spt_lo + r.spt_hi));
        len.push_back(r.spt_length);
        cover.push_back(r.spt_covers ? 1.0 : 0.0);
        secs[i] = timing[i][3];
        report.spt_empty += r.spt_empty ? 1 : 0;
        report.spt_truncated += r.spt_truncated ? 1 : 0;
        if (r.feasibility_reject && *r.feasibility_reject) ++rejections;
    }
    report.spt.bias = mean_of(mid);
    report.spt.ci_length = mean_of(len);
    report.spt.coverage = mean_of(cover);
    if (cfg.record_timing) report.spt.runtime_seconds = pairwise_sum(secs);
    if (cfg.feasibility) report.feasibility_rejection_rate = static_cast<double>(rejections) / static_cast<double>(reps);
    return report;
}

}  // namespace spt
