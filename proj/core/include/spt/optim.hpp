#pragma once

#include "spt/numeric.hpp"

#include <optional>
#include <variant>

namespace spt {

struct SimplexPoint {
    Vector w;

    [[nodiscard]] Index size() const { return w.size(); }
    static SimplexPoint uniform(Index d);
};

// Euclidean projection onto {w >= 0, sum w = 1} by the sort-and-threshold rule.
SimplexPoint project_simplex(const Vector& x);

struct QpProblem {
    Matrix M;
    Vector v;
    double tol = 1e-10;
    int max_iter = 100000;
};

struct QpResult {
    SimplexPoint w_star;
    double objective = 0.0;  // ||M w_star - v||^2
    int iterations = 0;
    bool converged = false;
};

// min over the simplex of ||M w - v||^2.
QpResult solve_simplex_qp(const QpProblem& p);

// Largest eigenvalue magnitude of a symmetric matrix by power iteration
// (50 iterations, relative tolerance 1e-10, started from the ones vector).
double power_iteration(const Matrix& S);

// Quadratic w' G w - 2 c' w + kappa in Gram form. Callers that solve many
// problems sharing M (differing only in v) build G and L once and update c.
struct SimplexQuadratic {
    Matrix G;
    Vector c;
    double kappa = 0.0;
    double lipschitz = 0.0;  // bound on the largest eigenvalue of 2G

    static SimplexQuadratic from_least_squares(const Matrix& M, const Vector& v);
    void set_target(const Matrix& M, const Vector& v);
    [[nodiscard]] double value(const Vector& w) const;
};

struct QpOptions {
    double tol = 1e-10;
    int max_iter = 100000;
};

// Accelerated projected gradient with restart on objective increase. Stops
// once the projected-gradient step moves the iterate by at most tol.
// `start` defaults to uniform weights. The returned objective is the Gram-form
// value; callers holding M and v recompute the residual norm directly.
QpResult minimize_on_simplex(const SimplexQuadratic& q, const QpOptions& opt, const Vector* start = nullptr);

// Possibly indefinite quadratic on the simplex: projected gradient from the
// uniform point plus `starts` Dirichlet(1) starts drawn from `seed`; returns
// the best local solution found.
QpResult minimize_indefinite_on_simplex(const SimplexQuadratic& q, const QpOptions& opt, int starts, std::uint64_t seed);

enum class Sense { Min, Max };

struct LpOptimal {
    double value = 0.0;
    Vector w;
};
struct LpInfeasible {};
struct LpUnbounded {};

struct LpOutcome {
    std::variant<LpOptimal, LpInfeasible, LpUnbounded> status;

    [[nodiscard]] bool optimal() const { return std::holds_alternative<LpOptimal>(status); }
    [[nodiscard]] bool infeasible() const { return std::holds_alternative<LpInfeasible>(status); }
    [[nodiscard]] bool unbounded() const { return std::holds_alternative<LpUnbounded>(status); }
    [[nodiscard]] const LpOptimal& solution() const { return std::get<LpOptimal>(status); }
};

// Optimizes objective' w subject to A_eq w = b_eq, w >= 0 with a dense
// two-phase tableau simplex method and Bland's rule.
LpOutcome solve_lp(const Vector& objective, const Matrix& A_eq, const Vector& b_eq, Sense sense);

struct LeastSquaresResult {
    Vector coeffs;
    double residual_norm = 0.0;
};

// Minimum-norm least squares via a complete orthogonal decomposition (QR with
// column pivoting); pivots below 1e-10 of the largest are treated as zero.
LeastSquaresResult least_squares(const Matrix& M, const Vector& v);

}  // namespace spt
