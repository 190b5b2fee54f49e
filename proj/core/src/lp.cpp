#include "spt/error.hpp"
#include "spt/optim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace spt {

namespace {

// Dense tableau: rows 0..m-1 are constraints, row m holds reduced costs, and
// the last column holds the right-hand side (row m: minus the objective).
class Tableau {
public:
    Tableau(Matrix table, std::vector<Index> basis) : t_(std::move(table)), basis_(std::move(basis)) {}

    Index rows() const { return t_.rows() - 1; }
    Index rhs() const { return t_.cols() - 1; }
    Matrix& table() { return t_; }
    const std::vector<Index>& basis() const { return basis_; }

    void pivot(Index r, Index c) {
        t_.row(r) /= t_(r, c);
        for (Index i = 0; i < t_.rows(); ++i) {
            if (i == r) continue;
            const double f = t_(i, c);
            if (f != 0.0) t_.row(i) -= f * t_.row(r);
        }
        basis_[static_cast<std::size_t>(r)] = c;
    }

    enum class Result { Optimal, Unbounded };

    // Bland's rule: lowest-index improving column, ties in the ratio test
    // broken by the lowest basic variable index.
    Result run(Index allowed_cols, double cost_eps, double pivot_eps) {
        const Index m = rows();
        const Index max_pivots = 50 * (t_.cols() + m) + 1000;
        for (Index n_pivots = 0; n_pivots < max_pivots; ++n_pivots) {
            Index enter = -1;
            for (Index j = 0; j < allowed_cols; ++j) {
                if (t_(m, j) < -cost_eps) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return Result::Optimal;
            Index leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (Index i = 0; i < m; ++i) {
                const double a = t_(i, enter);
                if (a <= pivot_eps) continue;
                const double ratio = std::max(t_(i, rhs()), 0.0) / a;
                const double slack = 1e-12 * (1.0 + std::abs(best));
                if (leave < 0 || ratio < best - slack ||
                    (ratio <= best + slack && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
                    if (leave < 0 || ratio < best - slack) best = ratio;
                    leave = i;
                }
            }
            if (leave < 0) return Result::Unbounded;
            pivot(leave, enter);
        }
        throw std::runtime_error("simplex method exceeded its pivot budget");
    }

private:
    Matrix t_;
    std::vector<Index> basis_;
};

}  // namespace

LpOutcome solve_lp(const Vector& objective, const Matrix& A_eq, const Vector& b_eq, Sense sense) {
    const Index m = A_eq.rows();
    const Index n = A_eq.cols();
    if (objective.size() != n || b_eq.size() != m)
        throw Error(ErrorCode::DimensionMismatch, "LP: objective, constraint matrix and rhs are not conformable");
    if (!objective.allFinite() || !A_eq.allFinite() || !b_eq.allFinite())
        throw Error(ErrorCode::NonFiniteInput, "LP input");
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "LP needs at least one variable");

    const Vector cost = sense == Sense::Max ? Vector(-objective) : objective;
    const double b_norm = b_eq.norm();
    const double scale = 1.0 + (m > 0 ? A_eq.cwiseAbs().maxCoeff() : 0.0);
    const double pivot_eps = 1e-11 * scale;
    const double cost_eps = 1e-11 * (1.0 + cost.cwiseAbs().maxCoeff());

    // Phase 1: artificial basis on rows made to have nonnegative rhs.
    Matrix t = Matrix::Zero(m + 1, n + m + 1);
    std::vector<Index> basis(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) {
        const double sign = b_eq(i) < 0.0 ? -1.0 : 1.0;
        t.row(i).head(n) = sign * A_eq.row(i);
        t(i, n + i) = 1.0;
        t(i, n + m) = sign * b_eq(i);
        basis[static_cast<std::size_t>(i)] = n + i;
    }
    for (Index i = 0; i < m; ++i) {
        t.row(m).head(n) -= t.row(i).head(n);
        t(m, n + m) -= t(i, n + m);
    }
    Tableau phase1(std::move(t), std::move(basis));
    phase1.run(n + m, 1e-11, pivot_eps);
    const double infeasibility = -phase1.table()(m, n + m);
    if (infeasibility > 1e-8 * (1.0 + b_norm)) return LpOutcome{LpInfeasible{}};

    // Pivot remaining artificials out; rows where that is impossible are redundant.
    std::vector<Index> keep;
    for (Index i = 0; i < m; ++i) {
        if (phase1.basis()[static_cast<std::size_t>(i)] < n) {
            keep.push_back(i);
            continue;
        }
        Index col = -1;
        double largest = 1e-9;
        for (Index j = 0; j < n; ++j) {
            const double a = std::abs(phase1.table()(i, j));
            if (a > largest) {
                largest = a;
                col = j;
            }
        }
        if (col >= 0) {
            phase1.pivot(i, col);
            keep.push_back(i);
        }
    }

    const auto m2 = static_cast<Index>(keep.size());
    Matrix t2 = Matrix::Zero(m2 + 1, n + 1);
    std::vector<Index> basis2(keep.size());
    for (Index r = 0; r < m2; ++r) {
        const Index i = keep[static_cast<std::size_t>(r)];
        t2.row(r).head(n) = phase1.table().row(i).head(n);
        t2(r, n) = phase1.table()(i, n + m);
        basis2[static_cast<std::size_t>(r)] = phase1.basis()[static_cast<std::size_t>(i)];
    }
    t2.row(m2).head(n) = cost.transpose();
    for (Index r = 0; r < m2; ++r) {
        const double cb = cost(basis2[static_cast<std::size_t>(r)]);
        t2.row(m2) -= cb * t2.row(r);
    }
    Tableau phase2(std::move(t2), std::move(basis2));
    if (phase2.run(n, cost_eps, pivot_eps) == Tableau::Result::Unbounded) return LpOutcome{LpUnbounded{}};

    LpOptimal opt;
    opt.w = Vector::Zero(n);
    for (Index r = 0; r < m2; ++r) {
        const Index j = phase2.basis()[static_cast<std::size_t>(r)];
        opt.w(j) = std::max(phase2.table()(r, n), 0.0);
    }
    opt.value = objective.dot(opt.w);
    return LpOutcome{std::move(opt)};
}

}  // namespace spt
