#pragma once

#include "spt/data.hpp"
#include "spt/optim.hpp"

#include <optional>
#include <string_view>

namespace spt {

struct IdentifiedInterval {
    enum class Kind { Empty, Point, Interval, WholeLine };

    Kind kind = Kind::Empty;
    double lo = 0.0;  // Point: lo == hi == value
    double hi = 0.0;

    static IdentifiedInterval empty() { return {}; }
    static IdentifiedInterval point(double v) { return {Kind::Point, v, v}; }
    static IdentifiedInterval interval(double lo, double hi);
    static IdentifiedInterval whole_line() { return {Kind::WholeLine, 0.0, 0.0}; }

    [[nodiscard]] bool contains(double x, double slack = 0.0) const;
    // Length of the set; infinite for WholeLine, zero for Empty and Point.
    [[nodiscard]] double width() const;
};

std::string_view to_string(IdentifiedInterval::Kind kind);

struct SpanTestResult {
    Vector phi;  // T0 coefficients on [1 A_pre']
    double residual = 0.0;
    bool in_span = false;
};

struct AffineWeights {
    Vector w;
    double residual = 0.0;  // ||A_pre w - b_pre||
};

// Bounds of a_post' w over convex weights consistent with the pre-trends,
// together with the attaining weights when the set is non-empty.
struct ConvexBounds {
    IdentifiedInterval set;
    std::optional<Vector> w_lo;
    std::optional<Vector> w_hi;
};

ConvexBounds convex_trend_bounds_detail(const TrendSystem& ts);
IdentifiedInterval convex_trend_bounds(const TrendSystem& ts);

IdentifiedInterval affine_trend_set(const TrendSystem& ts);
IdentifiedInterval effect_set(const IdentifiedInterval& trend_set, const TrendSystem& ts);

// Throws InfeasibleSystem when no affine weights reproduce the pre-trends.
AffineWeights min_norm_affine_weights(const TrendSystem& ts);
SpanTestResult span_test_residual(const TrendSystem& ts);

// Least-squares fit of the stacked affine system [A_pre; 1'] w = [b_pre; 1].
LeastSquaresResult affine_fit(const TrendSystem& ts);
// Tolerance for affine feasibility: 1e-8 * (1 + ||b_pre||).
double affine_tolerance(const TrendSystem& ts);

}  // namespace spt
