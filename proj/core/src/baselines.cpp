#include "spt/baselines.hpp"

#include "spt/error.hpp"

#include <cmath>

namespace spt {

namespace {

struct Moments {
    double mean = 0.0;
    double var = 0.0;  // sample variance (n - 1)
    std::size_t n = 0;
};

Moments moments(const std::vector<double>& x) {
    Moments m;
    m.n = x.size();
    if (m.n == 0) return m;
    m.mean = pairwise_sum(x) / static_cast<double>(m.n);
    if (m.n < 2) return m;
    std::vector<double> sq(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) sq[i] = (x[i] - m.mean) * (x[i] - m.mean);
    m.var = pairwise_sum(sq) / static_cast<double>(m.n - 1);
    return m;
}

DidResult did_from(double estimate, double se) {
    return DidResult{estimate, se, estimate - 1.96 * se, estimate + 1.96 * se};
}

DidResult did_panel(const PanelDataset& d) {
    const int pre = d.T0 - 1;
    const int post = d.T - 1;
    std::vector<double> treated;
    std::vector<double> control;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double change = d.outcomes(static_cast<Index>(i), post) - d.outcomes(static_cast<Index>(i), pre);
        (d.unit[i] == 0 ? treated : control).push_back(change);
    }
    if (treated.empty() || control.empty()) throw Error(ErrorCode::DegenerateShape, "DID needs treated and control individuals");
    const Moments mt = moments(treated);
    const Moments mc = moments(control);
    const double se = std::sqrt(mt.var / static_cast<double>(mt.n) + mc.var / static_cast<double>(mc.n));
    return did_from(mt.mean - mc.mean, se);
}

DidResult did_rcs(const RcsDataset& d) {
    const int pre = d.T0 - 1;
    const int post = d.T - 1;
    std::vector<double> cells[4];  // treated post, treated pre, control post, control pre
    for (std::size_t i = 0; i < d.size(); ++i) {
        const int t = d.period[i];
        if (t != pre && t != post) continue;
        const int slot = (d.unit[i] == 0 ? 0 : 2) + (t == post ? 0 : 1);
        cells[slot].push_back(d.outcome(static_cast<Index>(i)));
    }
    Moments m[4];
    double var = 0.0;
    for (int c = 0; c < 4; ++c) {
        if (cells[c].size() < 2) throw Error(ErrorCode::SingletonCell, "DID needs two observations per pooled cell");
        m[c] = moments(cells[c]);
        var += m[c].var / static_cast<double>(m[c].n);
    }
    return did_from((m[0].mean - m[1].mean) - (m[2].mean - m[3].mean), std::sqrt(var));
}

// Control pre-period level means (T0 x (K-1)) and treated pre-period levels.
Matrix control_levels(const CellStats& stats, int periods) {
    return stats.means.block(1, 0, stats.K - 1, periods).transpose();
}

Vector treated_levels(const CellStats& stats, int periods) {
    return stats.means.row(0).head(periods).transpose();
}

void check_T0(const CellStats& stats, int T0, int minimum) {
    if (stats.K < 2) throw Error(ErrorCode::DegenerateShape, "need at least one control unit");
    if (T0 < minimum || T0 >= stats.T) throw Error(ErrorCode::DegenerateShape, "T0 out of range");
}

}  // namespace

PtWeights pt_weights(const CellStats& stats) {
    if (stats.K < 2) throw Error(ErrorCode::DegenerateShape, "need at least one control unit");
    Vector w(stats.K - 1);
    for (int k = 1; k < stats.K; ++k) w(k - 1) = stats.unit_share(k);
    w /= w.sum();
    return PtWeights{SimplexPoint{std::move(w)}};
}

PtWeights pt_weights(const Dataset& data) {
    return pt_weights(cell_means(data));
}

DidResult did_estimate(const Dataset& data) {
    return std::visit(
        [](const auto& d) {
            if constexpr (std::is_same_v<std::decay_t<decltype(d)>, PanelDataset>) {
                return did_panel(d);
            } else {
                return did_rcs(d);
            }
        },
        data);
}

ScWeights sc_weights(const CellStats& stats, int T0, const QpOptions& opt) {
    check_T0(stats, T0, 1);
    const Matrix M = control_levels(stats, T0);
    const Vector v = treated_levels(stats, T0);
    const QpResult r = solve_simplex_qp(QpProblem{M, v, opt.tol, opt.max_iter});
    return ScWeights{r.w_star, r.objective};
}

double sc_estimate(const CellStats& stats, const ScWeights& sc) {
    const int post = stats.T - 1;
    return stats.means(0, post) - stats.means.col(post).tail(stats.K - 1).dot(sc.w.w);
}

double default_zeta(const CellStats& stats, int T0) {
    check_T0(stats, T0, 2);
    std::vector<double> diffs;
    for (int k = 1; k < stats.K; ++k)
        for (int t = 1; t < T0; ++t) diffs.push_back(stats.means(k, t) - stats.means(k, t - 1));
    const Moments m = moments(diffs);
    return std::pow(static_cast<double>(stats.K - 1), 0.25) * std::sqrt(m.var);
}

double sdid_objective(const CellStats& stats, int T0, double w0, const Vector& w, double zeta) {
    const Matrix Y = control_levels(stats, T0);
    const Vector y = treated_levels(stats, T0);
    const Vector fit = (Y * w).array() + w0 - y.array();
    return fit.squaredNorm() + zeta * w.squaredNorm();
}

SdidWeights sdid_weights(const CellStats& stats, int T0, std::optional<double> zeta_override, const QpOptions& opt) {
    check_T0(stats, T0, 2);
    if (zeta_override && !(*zeta_override >= 0.0)) throw Error(ErrorCode::InvalidArgument, "zeta must be nonnegative");
    const double zeta = zeta_override ? *zeta_override : default_zeta(stats, T0);
    const int controls = stats.K - 1;
    const Matrix Y = control_levels(stats, T0);
    const Vector y = treated_levels(stats, T0);

    SdidWeights out;
    out.zeta = zeta;

    // Unit weights. Start from the time-demeaned problem (w0 profiled out),
    // then alternate the closed-form intercept with the ridge-augmented QP.
    Matrix aug = Matrix::Zero(T0 + controls, controls);
    aug.bottomRows(controls) = std::sqrt(zeta) * Matrix::Identity(controls, controls);
    Vector target = Vector::Zero(T0 + controls);
    aug.topRows(T0) = Y.rowwise() - Y.colwise().mean();
    target.head(T0) = y.array() - y.mean();
    SimplexQuadratic q = SimplexQuadratic::from_least_squares(aug, target);
    QpResult r = minimize_on_simplex(q, opt);
    Vector w = r.w_star.w;
    double w0 = (y - Y * w).mean();
    double objective = sdid_objective(stats, T0, w0, w, zeta);
    out.objective_trace.push_back(objective);

    aug.topRows(T0) = Y;
    q = SimplexQuadratic::from_least_squares(aug, target);
    for (int round = 0; round < 10000; ++round) {
        target.head(T0) = y.array() - w0;
        q.set_target(aug, target);
        r = minimize_on_simplex(q, opt, &w);
        Vector w_next = r.w_star.w;
        const double w0_next = (y - Y * w_next).mean();
        const double next = sdid_objective(stats, T0, w0_next, w_next, zeta);
        if (next > objective) break;  // converged to solver precision
        const double gain = objective - next;
        w = std::move(w_next);
        w0 = w0_next;
        objective = next;
        out.objective_trace.push_back(objective);
        if (gain <= 1e-10 * (1.0 + objective)) break;
    }
    out.w = SimplexPoint{std::move(w)};
    out.w0 = w0;

    // Time weights: regress control post-period means on their pre-period
    // means with an intercept, over the time simplex and without a ridge.
    const Matrix X = Y.transpose();  // controls x T0
    const Vector z = stats.means.col(stats.T - 1).tail(controls);
    const Matrix Xc = X.rowwise() - X.colwise().mean();
    const Vector zc = z.array() - z.mean();
    const QpResult rt = minimize_on_simplex(SimplexQuadratic::from_least_squares(Xc, zc), opt);
    out.nu = rt.w_star;
    out.nu0 = (z - X * out.nu.w).mean();
    return out;
}

double two_way_counterfactual(const CellStats& stats, const Vector& nu, const Vector& w) {
    const Index periods = nu.size();
    if (w.size() != stats.K - 1 || periods < 1 || periods >= stats.T)
        throw Error(ErrorCode::DimensionMismatch, "two-way counterfactual weights do not match the cell means");
    const int post = stats.T - 1;
    const Vector treated = stats.means.row(0).head(periods).transpose();
    const Matrix controls = stats.means.block(1, 0, stats.K - 1, periods);  // (K-1) x periods
    const Vector controls_post = stats.means.col(post).tail(stats.K - 1);
    return nu.dot(treated) + w.dot(controls_post) - w.dot(controls * nu);
}

double sdid_estimate(const CellStats& stats, const SdidWeights& sdid) {
    return stats.means(0, stats.T - 1) - two_way_counterfactual(stats, sdid.nu.w, sdid.w.w);
}

PtViolation pt_violation_vector(const TrendSystem& ts, const Vector& w, const PtWeights& ptw) {
    if (w.size() != ts.A.cols() || ptw.w.size() != ts.A.cols())
        throw Error(ErrorCode::DimensionMismatch, "weights must have one entry per control");
    return PtViolation{ts.A * (w - ptw.w.w)};
}

}  // namespace spt
