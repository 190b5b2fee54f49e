#include "spt/optim.hpp"

#include "spt/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace spt {

namespace {

// In-place projection; `scratch` avoids an allocation per call in hot loops.
void project_in_place(Vector& x, std::vector<double>& scratch) {
    const auto d = static_cast<std::size_t>(x.size());
    scratch.assign(x.data(), x.data() + d);
    std::sort(scratch.begin(), scratch.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        cumulative += scratch[j];
        const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (scratch[j] - candidate > 0.0) theta = candidate;
    }
    for (Index i = 0; i < x.size(); ++i) x(i) = std::max(x(i) - theta, 0.0);
    // Renormalize away rounding so the sum is one to working precision.
    const double s = x.sum();
    if (s > 0.0) x /= s;
}

Vector gradient(const SimplexQuadratic& q, const Vector& w) {
    return 2.0 * (q.G * w - q.c);
}

}  // namespace

SimplexPoint SimplexPoint::uniform(Index d) {
    return SimplexPoint{Vector::Constant(d, 1.0 / static_cast<double>(d))};
}

SimplexPoint project_simplex(const Vector& x) {
    if (x.size() < 1) throw Error(ErrorCode::InvalidArgument, "cannot project an empty vector");
    if (!x.allFinite()) throw Error(ErrorCode::NonFiniteInput, "project_simplex input");
    Vector w = x;
    std::vector<double> scratch;
    project_in_place(w, scratch);
    return SimplexPoint{std::move(w)};
}

double power_iteration(const Matrix& S) {
    const Index d = S.rows();
    if (d == 0) return 0.0;
    Vector x = Vector::Ones(d).normalized();
    double estimate = 0.0;
    for (int attempt = 0; attempt < 2; ++attempt) {
        bool collapsed = false;
        for (int it = 0; it < 50; ++it) {
            Vector y = S * x;
            const double norm = y.norm();
            if (!(norm > 0.0)) {
                collapsed = true;
                break;
            }
            const double previous = estimate;
            estimate = std::max(estimate, norm);
            x = y / norm;
            if (std::abs(norm - previous) <= 1e-10 * norm) break;
        }
        if (!collapsed) break;
        // The ones vector can lie in the null space; retry from a generic start.
        x = Vector::LinSpaced(d, 1.0, static_cast<double>(d) + 1.0).normalized();
        x(0) = -x(0);
    }
    return estimate;
}

SimplexQuadratic SimplexQuadratic::from_least_squares(const Matrix& M, const Vector& v) {
    if (M.rows() != v.size()) throw Error(ErrorCode::DimensionMismatch, "QP: rows of M must match v");
    SimplexQuadratic q;
    q.G = M.transpose() * M;
    q.c = M.transpose() * v;
    q.kappa = v.squaredNorm();
    q.lipschitz = 2.0 * power_iteration(q.G) * 1.05;
    if (!(q.lipschitz > 0.0)) q.lipschitz = 1.0;
    return q;
}

void SimplexQuadratic::set_target(const Matrix& M, const Vector& v) {
    c.noalias() = M.transpose() * v;
    kappa = v.squaredNorm();
}

double SimplexQuadratic::value(const Vector& w) const {
    return w.dot(G * w) - 2.0 * c.dot(w) + kappa;
}

QpResult minimize_on_simplex(const SimplexQuadratic& q, const QpOptions& opt, const Vector* start) {
    const Index d = q.G.rows();
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "QP needs at least one weight");
    std::vector<double> scratch;
    Vector w = start ? *start : Vector::Constant(d, 1.0 / static_cast<double>(d));
    if (start) project_in_place(w, scratch);

    double L = q.lipschitz;
    Vector y = w;
    Vector w_new(d);
    double t = 1.0;
    double f = q.value(w);
    const double noise = 1e-13 * (1.0 + std::abs(q.kappa));
    bool momentum = false;

    QpResult res;
    int it = 0;
    for (; it < opt.max_iter; ++it) {
        w_new = y - gradient(q, y) / L;
        project_in_place(w_new, scratch);
        const double step = (w_new - y).norm();
        const double f_new = q.value(w_new);
        if (f_new > f + noise) {
            if (momentum) {
                y = w;
                t = 1.0;
                momentum = false;
            } else {
                L *= 2.0;  // step too long for a plain gradient step
            }
            continue;
        }
        const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = w_new + ((t - 1.0) / t_new) * (w_new - w);
        momentum = t > 1.0;
        w = w_new;
        t = t_new;
        f = f_new;
        if (step <= opt.tol) {
            res.converged = true;
            ++it;
            break;
        }
    }
    res.iterations = it;
    res.objective = std::max(f, 0.0);
    res.w_star = SimplexPoint{std::move(w)};
    return res;
}

QpResult minimize_indefinite_on_simplex(const SimplexQuadratic& q, const QpOptions& opt, int starts, std::uint64_t seed) {
    const Index d = q.G.rows();
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "QP needs at least one weight");
    const double L = std::max(2.0 * power_iteration(q.G) * 1.05, 1e-300);
    std::vector<double> scratch;

    auto descend = [&](Vector w) {
        QpResult r;
        int it = 0;
        for (; it < opt.max_iter; ++it) {
            Vector next = w - gradient(q, w) / L;
            project_in_place(next, scratch);
            const double step = (next - w).norm();
            w = std::move(next);
            if (step <= opt.tol) {
                r.converged = true;
                ++it;
                break;
            }
        }
        r.iterations = it;
        r.objective = q.value(w);
        r.w_star = SimplexPoint{std::move(w)};
        return r;
    };

    QpResult best = descend(Vector::Constant(d, 1.0 / static_cast<double>(d)));
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> exp1(1.0);
    for (int s = 0; s < starts; ++s) {
        Vector w(d);
        for (Index i = 0; i < d; ++i) w(i) = exp1(rng);
        w /= w.sum();
        QpResult r = descend(std::move(w));
        if (r.objective < best.objective) best = std::move(r);
    }
    return best;
}

QpResult solve_simplex_qp(const QpProblem& p) {
    if (p.M.cols() < 1) throw Error(ErrorCode::InvalidArgument, "QP needs at least one weight");
    if (!(p.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "QP tolerance must be positive");
    const SimplexQuadratic q = SimplexQuadratic::from_least_squares(p.M, p.v);
    QpResult r = minimize_on_simplex(q, QpOptions{p.tol, p.max_iter});
    r.objective = (p.M * r.w_star.w - p.v).squaredNorm();
    return r;
}

LeastSquaresResult least_squares(const Matrix& M, const Vector& v) {
    if (M.rows() != v.size()) throw Error(ErrorCode::DimensionMismatch, "least squares: rows of M must match v");
    if (!M.allFinite() || !v.allFinite()) throw Error(ErrorCode::NonFiniteInput, "least squares input");
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
    cod.setThreshold(1e-10);
    cod.compute(M);
    LeastSquaresResult r;
    r.coeffs = cod.solve(v);
    r.residual_norm = (M * r.coeffs - v).norm();
    return r;
}

}  // namespace spt
