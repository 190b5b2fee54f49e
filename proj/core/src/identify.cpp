#include "spt/identify.hpp"

#include "spt/error.hpp"

#include <cmath>
#include <limits>

namespace spt {

namespace {

Matrix stacked_constraints(const TrendSystem& ts) {
    const Index controls = ts.A_pre.cols();
    Matrix A(ts.A_pre.rows() + 1, controls);
    A.topRows(ts.A_pre.rows()) = ts.A_pre;
    A.row(ts.A_pre.rows()).setOnes();
    return A;
}

Vector stacked_rhs(const TrendSystem& ts) {
    Vector b(ts.b_pre.size() + 1);
    b.head(ts.b_pre.size()) = ts.b_pre;
    b(ts.b_pre.size()) = 1.0;
    return b;
}

}  // namespace

IdentifiedInterval IdentifiedInterval::interval(double lo, double hi) {
    if (!(lo <= hi)) throw Error(ErrorCode::InvalidArgument, "interval requires lo <= hi");
    return {Kind::Interval, lo, hi};
}

bool IdentifiedInterval::contains(double x, double slack) const {
    switch (kind) {
        case Kind::Empty: return false;
        case Kind::WholeLine: return true;
        case Kind::Point:
        case Kind::Interval: return x >= lo - slack && x <= hi + slack;
    }
    return false;
}

double IdentifiedInterval::width() const {
    switch (kind) {
        case Kind::WholeLine: return std::numeric_limits<double>::infinity();
        case Kind::Interval: return hi - lo;
        default: return 0.0;
    }
}

std::string_view to_string(IdentifiedInterval::Kind kind) {
    switch (kind) {
        case IdentifiedInterval::Kind::Empty: return "empty";
        case IdentifiedInterval::Kind::Point: return "point";
        case IdentifiedInterval::Kind::Interval: return "interval";
        case IdentifiedInterval::Kind::WholeLine: return "whole_line";
    }
    return "unknown";
}

ConvexBounds convex_trend_bounds_detail(const TrendSystem& ts) {
    const Matrix A = stacked_constraints(ts);
    const Vector b = stacked_rhs(ts);
    const LpOutcome lo = solve_lp(ts.a_post, A, b, Sense::Min);
    if (lo.infeasible()) return ConvexBounds{};
    const LpOutcome hi = solve_lp(ts.a_post, A, b, Sense::Max);
    if (hi.infeasible()) return ConvexBounds{};
    // The feasible region lies in the simplex, so neither problem is unbounded.
    if (!lo.optimal() || !hi.optimal()) throw Error(ErrorCode::InfeasibleSystem, "convex bounds LP reported unbounded");

    ConvexBounds out;
    out.w_lo = lo.solution().w;
    out.w_hi = hi.solution().w;
    const double l = lo.solution().value;
    const double h = hi.solution().value;
    if (std::abs(h - l) <= 1e-8 * (1.0 + std::abs(h))) {
        out.set = IdentifiedInterval::point(0.5 * (l + h));
    } else {
        out.set = IdentifiedInterval::interval(std::min(l, h), std::max(l, h));
    }
    return out;
}

IdentifiedInterval convex_trend_bounds(const TrendSystem& ts) {
    return convex_trend_bounds_detail(ts).set;
}

LeastSquaresResult affine_fit(const TrendSystem& ts) {
    return least_squares(stacked_constraints(ts), stacked_rhs(ts));
}

double affine_tolerance(const TrendSystem& ts) {
    return 1e-8 * (1.0 + ts.b_pre.norm());
}

SpanTestResult span_test_residual(const TrendSystem& ts) {
    const Index controls = ts.A_pre.cols();
    const Index T0 = ts.A_pre.rows() + 1;
    Matrix design(controls, T0);
    design.col(0).setOnes();
    design.rightCols(T0 - 1) = ts.A_pre.transpose();
    const LeastSquaresResult ls = least_squares(design, ts.a_post);
    SpanTestResult r;
    r.phi = ls.coeffs;
    r.residual = ls.residual_norm;
    r.in_span = r.residual <= 1e-8 * (1.0 + ts.a_post.norm());
    return r;
}

IdentifiedInterval affine_trend_set(const TrendSystem& ts) {
    if (affine_fit(ts).residual_norm > affine_tolerance(ts)) return IdentifiedInterval::empty();
    const SpanTestResult span = span_test_residual(ts);
    if (!span.in_span) return IdentifiedInterval::whole_line();
    // Dual objective [1 b_pre'] phi.
    return IdentifiedInterval::point(span.phi(0) + ts.b_pre.dot(span.phi.tail(span.phi.size() - 1)));
}

IdentifiedInterval effect_set(const IdentifiedInterval& trend_set, const TrendSystem& ts) {
    const double delta = ts.treated_change();
    switch (trend_set.kind) {
        case IdentifiedInterval::Kind::Empty: return IdentifiedInterval::empty();
        case IdentifiedInterval::Kind::WholeLine: return IdentifiedInterval::whole_line();
        case IdentifiedInterval::Kind::Point: return IdentifiedInterval::point(delta - trend_set.lo);
        case IdentifiedInterval::Kind::Interval: return IdentifiedInterval::interval(delta - trend_set.hi, delta - trend_set.lo);
    }
    return IdentifiedInterval::empty();
}

AffineWeights min_norm_affine_weights(const TrendSystem& ts) {
    const LeastSquaresResult fit = affine_fit(ts);
    if (fit.residual_norm > affine_tolerance(ts))
        throw Error(ErrorCode::InfeasibleSystem, "no affine weights reproduce the pre-treatment trends (residual " +
                                                     std::to_string(fit.residual_norm) + ")");
    AffineWeights aw;
    aw.w = fit.coeffs;
    aw.residual = (ts.A_pre * aw.w - ts.b_pre).norm();
    return aw;
}

}  // namespace spt
