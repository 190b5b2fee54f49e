#include "spt/infer.hpp"

#include "spt/baselines.hpp"
#include "spt/error.hpp"
#include "spt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spt {

namespace {

QpOptions qp_options(const InferenceConfig& cfg) {
    return QpOptions{cfg.qp_tol, cfg.qp_max_iter};
}

// Top `rows` rows of a system, with tau added to the last of those rows.
struct Block {
    Matrix A;
    Vector b;
};

Block top_block(const Matrix& A, const Vector& b, Index rows) {
    return Block{A.topRows(rows), b.head(rows)};
}

Vector shifted_target(const Vector& b, double tau) {
    Vector v = b;
    v(v.size() - 1) -= tau;
    return v;
}

// Minimum of ||A w - (b - tau e)||^2 over the simplex for each tau in order,
// warm-starting each solve from the previous solution.
std::vector<QpResult> profile(const Matrix& A, const Vector& b, const std::vector<double>& taus, const QpOptions& opt) {
    SimplexQuadratic q = SimplexQuadratic::from_least_squares(A, b);
    std::vector<QpResult> out;
    out.reserve(taus.size());
    Vector warm;
    for (double tau : taus) {
        const Vector v = shifted_target(b, tau);
        q.set_target(A, v);
        QpResult r = minimize_on_simplex(q, opt, warm.size() ? &warm : nullptr);
        r.objective = (A * r.w_star.w - v).squaredNorm();
        warm = r.w_star.w;
        out.push_back(std::move(r));
    }
    return out;
}

// Numerical directional derivative draws: draws[g][r] for candidate g and
// replication r, on the top `rows` rows of the system.
std::vector<std::vector<double>> derivative_draws(const BootstrapEnsemble& ens, Index rows, const std::vector<double>& taus,
                                                  const std::vector<double>& Q_hat, const InferenceConfig& cfg) {
    const int B = ens.size();
    const auto G = taus.size();
    std::vector<std::vector<double>> by_rep(static_cast<std::size_t>(B));
    const QpOptions opt = qp_options(cfg);
    const Block hat = top_block(ens.estimate().A, ens.estimate().b, rows);
    const double s = ens.s();

    parallel_for(static_cast<std::size_t>(B), cfg.threads, [&](std::size_t ri) {
        const int r = static_cast<int>(ri);
        auto& out = by_rep[ri];
        out.resize(G);
        if (cfg.perturbation == Perturbation::Convex) {
            const Block pert = top_block(ens.perturbed_A(r), ens.perturbed_b(r), rows);
            const std::vector<QpResult> sol = profile(pert.A, pert.b, taus, opt);
            for (std::size_t g = 0; g < G; ++g) out[g] = (sol[g].objective - Q_hat[g]) / s;
            return;
        }
        const Block boot = top_block(ens.A_boot(r), ens.b_boot(r), rows);
        const double c = s * ens.root_n();
        for (std::size_t g = 0; g < G; ++g) {
            const Vector v_hat = shifted_target(hat.b, taus[g]);
            const Vector v_boot = shifted_target(boot.b, taus[g]);
            SimplexQuadratic q;
            q.G = (1.0 - c) * hat.A.transpose() * hat.A + c * boot.A.transpose() * boot.A;
            q.c = (1.0 - c) * hat.A.transpose() * v_hat + c * boot.A.transpose() * v_boot;
            q.kappa = (1.0 - c) * v_hat.squaredNorm() + c * v_boot.squaredNorm();
            const QpResult res = minimize_indefinite_on_simplex(q, opt, cfg.literal_starts, derive_seed(cfg.seed, ri + 1));
            const Vector& w = res.w_star.w;
            const double value = (1.0 - c) * (hat.A * w - v_hat).squaredNorm() + c * (boot.A * w - v_boot).squaredNorm();
            out[g] = (value - Q_hat[g]) / s;
        }
    });

    std::vector<std::vector<double>> draws(G, std::vector<double>(static_cast<std::size_t>(B)));
    for (int r = 0; r < B; ++r)
        for (std::size_t g = 0; g < G; ++g) draws[g][static_cast<std::size_t>(r)] = by_rep[static_cast<std::size_t>(r)][g];
    return draws;
}

GridSpec resolve_grid(const Dataset& data, const TrendSystem& ts, const InferenceConfig& cfg) {
    if (cfg.grid) return *cfg.grid;
    return default_grid(data, ts, cfg.default_grid_count);
}

}  // namespace

void validate_config(const InferenceConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
    if (!(cfg.varsigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "varsigma must be positive");
    if (!(cfg.alpha - cfg.varsigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "varsigma must be smaller than alpha");
    if (cfg.B < 100) throw Error(ErrorCode::InvalidArgument, "B must be at least 100");
    if (!(cfg.eta > 0.0 && cfg.eta < 0.5)) throw Error(ErrorCode::InvalidArgument, "eta must lie in (0, 1/2)");
    if (cfg.grid) {
        if (cfg.grid->count < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least 2 points");
        if (!(cfg.grid->lo < cfg.grid->hi)) throw Error(ErrorCode::InvalidArgument, "grid requires lo < hi");
    }
    if (cfg.default_grid_count < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least 2 points");
    if (!(cfg.qp_tol > 0.0) || cfg.qp_max_iter < 1) throw Error(ErrorCode::InvalidArgument, "QP tolerance and iteration cap must be positive");
    if (cfg.literal_starts < 0) throw Error(ErrorCode::InvalidArgument, "literal_starts must be nonnegative");
}

double step_size(std::int64_t n, double eta) {
    return std::pow(static_cast<double>(n), -eta);
}

Vector moment_vector(const SimplexPoint& w, const Matrix& A, const Vector& b, double tau) {
    if (A.cols() != w.size() || A.rows() != b.size() || b.size() < 1)
        throw Error(ErrorCode::DimensionMismatch, "moment vector: A, b and w are not conformable");
    Vector m = A * w.w - b;
    m(m.size() - 1) += tau;
    return m;
}

CriterionEval profiled_criterion(const TrendSystem& ts, double tau, const InferenceConfig& cfg) {
    const Vector v = shifted_target(ts.b, tau);
    QpResult r = solve_simplex_qp(QpProblem{ts.A, v, cfg.qp_tol, cfg.qp_max_iter});
    CriterionEval e;
    e.tau = tau;
    e.Q_hat = r.objective;
    e.w_star = std::move(r.w_star);
    e.statistic = std::sqrt(static_cast<double>(ts.n)) * e.Q_hat;
    return e;
}

BootstrapEnsemble::BootstrapEnsemble(const Dataset& data, const TrendSystem& ts, const InferenceConfig& cfg) : ts_(ts) {
    validate_config(cfg);
    s_ = step_size(ts.n, cfg.eta);
    root_n_ = std::sqrt(static_cast<double>(ts.n));
    const auto B = static_cast<std::size_t>(cfg.B);
    A_boot_.resize(B);
    b_boot_.resize(B);
    const auto n = static_cast<std::size_t>(sample_size(data));
    const int T0 = ts.T0();
    parallel_for(B, cfg.threads, [&](std::size_t r) {
        const MultiplierDraw draw = cfg.unit_multipliers ? unit_multipliers(n) : draw_multipliers(n, derive_seed(cfg.seed, r + 1));
        const TrendSystem boot = build_trend_system(multiplier_cell_means(data, draw), T0, ts.n);
        A_boot_[r] = boot.A;
        b_boot_[r] = boot.b;
    });
}

Matrix BootstrapEnsemble::perturbed_A(int r) const {
    return ts_.A + (s_ * root_n_) * (A_boot(r) - ts_.A);
}

Vector BootstrapEnsemble::perturbed_b(int r) const {
    return ts_.b + (s_ * root_n_) * (b_boot(r) - ts_.b);
}

double convex_perturbed_objective(const BootstrapEnsemble& ens, int r, const Vector& w, double tau, double s) {
    const TrendSystem& ts = ens.estimate();
    const Matrix A = ts.A + (s * ens.root_n()) * (ens.A_boot(r) - ts.A);
    const Vector b = ts.b + (s * ens.root_n()) * (ens.b_boot(r) - ts.b);
    return (A * w - shifted_target(b, tau)).squaredNorm();
}

double literal_perturbed_objective(const BootstrapEnsemble& ens, int r, const Vector& w, double tau, double s) {
    const TrendSystem& ts = ens.estimate();
    const double m_hat = (ts.A * w - shifted_target(ts.b, tau)).squaredNorm();
    const double m_boot = (ens.A_boot(r) * w - shifted_target(ens.b_boot(r), tau)).squaredNorm();
    return m_hat + s * ens.root_n() * (m_boot - m_hat);
}

double convex_perturbed_objective(const BootstrapEnsemble& ens, int r, const Vector& w, double tau) {
    return convex_perturbed_objective(ens, r, w, tau, ens.s());
}

double literal_perturbed_objective(const BootstrapEnsemble& ens, int r, const Vector& w, double tau) {
    return literal_perturbed_objective(ens, r, w, tau, ens.s());
}

namespace {

// Decides candidates by bisection on a set of anchor candidates. Each
// replication solves its perturbed problem exactly at the anchors only. An
// anchor residual y, shifted to another candidate, is feasible there (upper
// bound ||y||^2) and defines a dual lower bound 2 min_k (A'y)_k - 2 y'v - ||y||^2.
// The critical value lies between the quantiles of these bounds; candidates
// whose decision those quantiles do not settle become the next anchors.
class Screen {
public:
    Screen(const BootstrapEnsemble& ens, const std::vector<double>& taus, const std::vector<double>& Q_hat,
           const std::vector<double>& statistic, const InferenceConfig& cfg)
        : ens_(ens), taus_(taus), Q_hat_(Q_hat), stat_(statistic), cfg_(cfg), B_(static_cast<std::size_t>(ens.size())), G_(taus.size()) {
        lo_.assign(G_, std::vector<double>(B_, -std::numeric_limits<double>::infinity()));
        hi_.assign(G_, std::vector<double>(B_, std::numeric_limits<double>::infinity()));
        solved_.assign(B_, {});
        order_.resize(G_);
        for (std::size_t g = 0; g < G_; ++g) order_[g] = g;
        std::stable_sort(order_.begin(), order_.end(), [&](std::size_t x, std::size_t y) { return taus_[x] < taus_[y]; });
    }

    std::vector<CandidateTest> run() {
        std::vector<CandidateTest> out(G_);
        std::vector<bool> decided(G_, false);
        for (std::size_t g = 0; g < G_; ++g) {
            out[g].tau = taus_[g];
            out[g].statistic = stat_[g];
            out[g].critical_value = std::numeric_limits<double>::quiet_NaN();
        }
        const double level = 1.0 - cfg_.alpha + cfg_.varsigma;
        std::vector<std::size_t> anchors = initial_anchors();
        while (!anchors.empty()) {
            solve(anchors);
            for (std::size_t g : anchors) {
                out[g].critical_value = quantile_type7(exact_draws(g), level);
                out[g].accepted = stat_[g] <= out[g].critical_value + cfg_.varsigma;
                decided[g] = true;
            }
            for (std::size_t g = 0; g < G_; ++g) {
                if (decided[g]) continue;
                if (stat_[g] <= draw_quantile(lo_[g], g, level) + cfg_.varsigma) {
                    out[g].accepted = true;
                    decided[g] = true;
                } else if (stat_[g] > draw_quantile(hi_[g], g, level) + cfg_.varsigma) {
                    decided[g] = true;
                }
            }
            anchors = next_anchors(decided);
        }
        return out;
    }

private:
    struct Solved {
        std::size_t g;
        Vector w;
        Vector c;  // A' times the anchor residual
        Vector residual;
    };

    std::vector<std::size_t> initial_anchors() const {
        constexpr std::size_t kInitial = 3;
        std::vector<std::size_t> out;
        const std::size_t stride = std::max<std::size_t>(1, (G_ - 1) / (kInitial - 1));
        for (std::size_t i = 0; i < G_; i += stride) out.push_back(order_[i]);
        if (out.back() != order_.back()) out.push_back(order_.back());
        return out;
    }

    // Middle of each maximal run of undecided candidates in tau order.
    std::vector<std::size_t> next_anchors(const std::vector<bool>& decided) const {
        std::vector<std::size_t> out;
        std::size_t i = 0;
        while (i < G_) {
            if (decided[order_[i]]) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < G_ && !decided[order_[j]]) ++j;
            out.push_back(order_[i + (j - i) / 2]);
            i = j;
        }
        return out;
    }

    void solve(const std::vector<std::size_t>& anchors) {
        const QpOptions opt = qp_options(cfg_);
        parallel_for(B_, cfg_.threads, [&](std::size_t r) {
            const Matrix A = ens_.perturbed_A(static_cast<int>(r));
            const Vector b = ens_.perturbed_b(static_cast<int>(r));
            const Vector last = A.row(A.rows() - 1).transpose();
            SimplexQuadratic q = SimplexQuadratic::from_least_squares(A, b);
            auto& done = solved_[r];
            for (std::size_t g : anchors) {
                const Vector v = shifted_target(b, taus_[g]);
                q.set_target(A, v);
                const Vector* warm = nullptr;
                double gap = std::numeric_limits<double>::infinity();
                for (const Solved& s : done) {
                    const double d = std::abs(taus_[s.g] - taus_[g]);
                    if (d < gap) {
                        gap = d;
                        warm = &s.w;
                    }
                }
                const QpResult res = minimize_on_simplex(q, opt, warm);
                Solved s{g, res.w_star.w, Vector(), A * res.w_star.w - v};
                s.c = A.transpose() * s.residual;
                tighten(r, s, b, last);
                done.push_back(std::move(s));
            }
        });
    }

    void tighten(std::size_t r, const Solved& s, const Vector& b, const Vector& last) {
        const double exact = s.residual.squaredNorm();
        lo_[s.g][r] = exact;
        hi_[s.g][r] = exact;
        const double bv = s.residual.dot(b);
        const double r_last = s.residual(s.residual.size() - 1);
        const double b_last = b(b.size() - 1);
        for (std::size_t g = 0; g < G_; ++g) {
            if (g == s.g) continue;
            const double d = taus_[g] - taus_[s.g];
            const double yy = exact + 2.0 * d * r_last + d * d;
            // y = residual + d e, v = b - tau_g e
            const double yv = bv - taus_[g] * r_last + d * b_last - d * taus_[g];
            const double dual = 2.0 * (s.c + d * last).minCoeff() - 2.0 * yv - yy;
            lo_[g][r] = std::max(lo_[g][r], std::max(0.0, dual));
            hi_[g][r] = std::min(hi_[g][r], yy);
        }
    }

    std::vector<double> exact_draws(std::size_t g) const {
        std::vector<double> d(B_);
        for (std::size_t r = 0; r < B_; ++r) d[r] = (hi_[g][r] - Q_hat_[g]) / ens_.s();
        return d;
    }

    double draw_quantile(const std::vector<double>& bound, std::size_t g, double level) const {
        std::vector<double> d(B_);
        for (std::size_t r = 0; r < B_; ++r) d[r] = (bound[r] - Q_hat_[g]) / ens_.s();
        return quantile_type7(std::move(d), level);
    }

    const BootstrapEnsemble& ens_;
    const std::vector<double>& taus_;
    const std::vector<double>& Q_hat_;
    const std::vector<double>& stat_;
    const InferenceConfig& cfg_;
    std::size_t B_;
    std::size_t G_;
    std::vector<std::vector<double>> lo_;
    std::vector<std::vector<double>> hi_;
    std::vector<std::vector<Solved>> solved_;
    std::vector<std::size_t> order_;
};

}  // namespace

std::vector<CandidateTest> test_candidates(const BootstrapEnsemble& ens, const std::vector<double>& taus, const InferenceConfig& cfg) {
    validate_config(cfg);
    const TrendSystem& ts = ens.estimate();
    const std::vector<QpResult> fits = profile(ts.A, ts.b, taus, qp_options(cfg));
    std::vector<double> Q_hat(taus.size());
    std::vector<double> stat(taus.size());
    for (std::size_t g = 0; g < taus.size(); ++g) {
        Q_hat[g] = fits[g].objective;
        stat[g] = ens.root_n() * Q_hat[g];
    }
    if (cfg.screen && cfg.perturbation == Perturbation::Convex && !taus.empty()) return Screen(ens, taus, Q_hat, stat, cfg).run();

    const auto draws = derivative_draws(ens, ts.A.rows(), taus, Q_hat, cfg);
    const double level = 1.0 - cfg.alpha + cfg.varsigma;
    std::vector<CandidateTest> out(taus.size());
    for (std::size_t g = 0; g < taus.size(); ++g) {
        out[g].tau = taus[g];
        out[g].statistic = stat[g];
        out[g].critical_value = quantile_type7(draws[g], level);
        out[g].accepted = out[g].statistic <= out[g].critical_value + cfg.varsigma;
    }
    return out;
}

std::vector<double> bootstrap_derivatives(const BootstrapEnsemble& ens, double tau, const InferenceConfig& cfg) {
    const TrendSystem& ts = ens.estimate();
    const std::vector<double> taus{tau};
    const std::vector<double> Q_hat{profile(ts.A, ts.b, taus, qp_options(cfg)).front().objective};
    return derivative_draws(ens, ts.A.rows(), taus, Q_hat, cfg).front();
}

double bootstrap_critical_value(const Dataset& data, const TrendSystem& ts, double tau, const InferenceConfig& cfg) {
    const BootstrapEnsemble ens(data, ts, cfg);
    return quantile_type7(bootstrap_derivatives(ens, tau, cfg), 1.0 - cfg.alpha + cfg.varsigma);
}

double ConfidenceSet::total_length() const {
    double total = 0.0;
    for (const auto& [lo, hi] : intervals) total += hi - lo;
    return total;
}

std::vector<std::pair<double, double>> accepted_runs(const std::vector<CandidateTest>& grid) {
    std::vector<std::pair<double, double>> runs;
    bool open = false;
    for (const auto& c : grid) {
        if (c.accepted) {
            if (!open) runs.emplace_back(c.tau, c.tau);
            runs.back().second = c.tau;
            open = true;
        } else {
            open = false;
        }
    }
    return runs;
}

std::vector<double> grid_points(const GridSpec& g) {
    if (g.count < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least 2 points");
    std::vector<double> taus(static_cast<std::size_t>(g.count));
    const double step = (g.hi - g.lo) / (g.count - 1);
    for (int i = 0; i < g.count; ++i) taus[static_cast<std::size_t>(i)] = g.lo + step * i;
    taus.back() = g.hi;
    return taus;
}

GridSpec default_grid(const Dataset& data, const TrendSystem& ts, int count) {
    const DidResult did = did_estimate(data);
    const IdentifiedInterval effect = effect_set(convex_trend_bounds(ts), ts);
    double far = 0.0;
    double width = 0.0;
    if (effect.kind == IdentifiedInterval::Kind::Point || effect.kind == IdentifiedInterval::Kind::Interval) {
        far = std::max(std::abs(effect.lo - did.estimate), std::abs(effect.hi - did.estimate));
        width = effect.width();
    } else {
        // Pre-trends cannot be matched exactly: use the effect implied by the
        // best-fitting convex weights (the minimizer of the profiled criterion).
        const Block pre = top_block(ts.A, ts.b, ts.A.rows() - 1);
        const QpResult fit = solve_simplex_qp(QpProblem{pre.A, pre.b});
        far = std::abs(ts.treated_change() - ts.a_post.dot(fit.w_star.w) - did.estimate);
    }
    double half = std::max(4.0 * did.se, std::max(far, width) + 2.0 * did.se);
    if (!(half > 0.0)) half = 1.0;  // noiseless input with a point set: any positive scale
    return GridSpec{did.estimate - half, did.estimate + half, count};
}

ConfidenceSetWithProbes confidence_set_with_probes(const Dataset& data, const InferenceConfig& cfg, const std::vector<double>& probes) {
    validate_config(cfg);
    const TrendSystem ts = build_trend_system(data);
    GridSpec spec = resolve_grid(data, ts, cfg);
    const BootstrapEnsemble ens(data, ts, cfg);

    // A default grid is widened around its center until both ends are
    // rejected; widening depends only on the ends, so only they are tested.
    if (!cfg.grid) {
        for (int expansion = 0; expansion < kMaxGridExpansions; ++expansion) {
            const auto ends = test_candidates(ens, {spec.lo, spec.hi}, cfg);
            if (!ends[0].accepted && !ends[1].accepted) break;
            const double center = 0.5 * (spec.lo + spec.hi);
            const double half = spec.hi - center;
            spec.lo = center - 2.0 * half;
            spec.hi = center + 2.0 * half;
        }
    }
    std::vector<double> taus = grid_points(spec);
    const std::size_t G = taus.size();
    taus.insert(taus.end(), probes.begin(), probes.end());
    std::vector<CandidateTest> tested = test_candidates(ens, taus, cfg);

    ConfidenceSetWithProbes out;
    out.probes.assign(tested.begin() + static_cast<std::ptrdiff_t>(G), tested.end());
    tested.resize(G);
    ConfidenceSet& cs = out.cs;
    cs.grid = std::move(tested);
    cs.intervals = accepted_runs(cs.grid);
    cs.grid_spec = spec;
    cs.alpha = cfg.alpha;
    cs.varsigma = cfg.varsigma;
    cs.B = cfg.B;
    cs.eta = cfg.eta;
    cs.s_n = ens.s();
    cs.n = ts.n;
    cs.seed = cfg.seed;
    cs.truncated_lo = cs.grid.front().accepted;
    cs.truncated_hi = cs.grid.back().accepted;
    return out;
}

ConfidenceSet confidence_set(const Dataset& data, const InferenceConfig& cfg) {
    return confidence_set_with_probes(data, cfg, {}).cs;
}

FeasibilityTestResult feasibility_test(const Dataset& data, const InferenceConfig& cfg) {
    validate_config(cfg);
    const TrendSystem ts = build_trend_system(data);
    const Index rows = ts.A.rows() - 1;
    const Block pre = top_block(ts.A, ts.b, rows);
    const std::vector<double> zero{0.0};
    // tau enters only the post row, which is excluded here.
    const QpResult fit = profile(pre.A, pre.b, zero, qp_options(cfg)).front();

    const BootstrapEnsemble ens(data, ts, cfg);
    const std::vector<double> draws = derivative_draws(ens, rows, zero, {fit.objective}, cfg).front();

    FeasibilityTestResult out;
    out.Q_hat = fit.objective;
    out.w_star = fit.w_star;
    out.statistic = ens.root_n() * fit.objective;
    out.critical_value = quantile_type7(draws, 1.0 - cfg.alpha + cfg.varsigma) + cfg.varsigma;
    out.reject = out.statistic > out.critical_value;
    const auto exceed = std::count_if(draws.begin(), draws.end(), [&](double d) { return d >= out.statistic; });
    out.p_value_proxy = static_cast<double>(exceed) / static_cast<double>(draws.size());
    return out;
}

}  // namespace spt
