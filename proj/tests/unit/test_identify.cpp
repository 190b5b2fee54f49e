#include "spt/error.hpp"
#include "spt/identify.hpp"
#include "spt/sim.hpp"

#include "../fixtures/fixtures.hpp"
#include "../oracles.hpp"

#include <doctest.h>

#include <random>

using namespace spt;
using Kind = IdentifiedInterval::Kind;

namespace {

TrendSystem random_twfe(std::mt19937_64& rng, int K, int T, int T0) {
    return fixture::twfe(oracle::normal_vector(T, rng), oracle::normal_vector(K, rng), T0);
}

// Last-period means shifted by unit-specific amounts.
TrendSystem perturbed_twfe(std::mt19937_64& rng, int K, int T, int T0) {
    const Vector lambda = oracle::normal_vector(T, rng);
    const Vector gamma = oracle::normal_vector(K, rng);
    CellStats s = twfe_population_stats(lambda, gamma);
    s.means.col(T - 1) += oracle::normal_vector(K, rng);
    return build_trend_system(s, T0, 1);
}

bool nested(const IdentifiedInterval& inner, const IdentifiedInterval& outer) {
    if (inner.kind == Kind::Empty || outer.kind == Kind::WholeLine) return true;
    if (outer.kind == Kind::Empty) return false;
    return inner.lo >= outer.lo - 1e-8 * (1 + std::abs(outer.lo)) && inner.hi <= outer.hi + 1e-8 * (1 + std::abs(outer.hi));
}

// Random trend system, feasible for convex weights with probability ~0.8.
TrendSystem random_system(std::mt19937_64& rng, int d, int rows) {
    const Matrix A_pre = oracle::normal_matrix(rows, d, rng);
    Vector b_pre = A_pre * oracle::dirichlet(d, rng);
    std::bernoulli_distribution shift(0.2);
    if (shift(rng)) b_pre += oracle::normal_vector(rows, rng, 3.0);
    return fixture::system(A_pre, b_pre, oracle::normal_vector(d, rng), oracle::normal_vector(1, rng)(0));
}

}  // namespace

TEST_CASE("convex bounds: examples") {
    std::mt19937_64 rng(1);
    const TrendSystem twfe = random_twfe(rng, 5, 6, 4);
    const IdentifiedInterval p = convex_trend_bounds(twfe);
    CHECK(p.kind == Kind::Point);
    CHECK(p.lo == doctest::Approx(twfe.a_post(0)));

    const IdentifiedInterval seg = convex_trend_bounds(fixture::segment());
    CHECK(seg.kind == Kind::Interval);
    CHECK(seg.lo == doctest::Approx(1.0));
    CHECK(seg.hi == doctest::Approx(2.0));

    CHECK(convex_trend_bounds(fixture::hull_violation()).kind == Kind::Empty);
}

TEST_CASE("convex bounds: attaining weights are feasible") {
    const ConvexBounds cb = convex_trend_bounds_detail(fixture::segment());
    REQUIRE(cb.w_lo);
    REQUIRE(cb.w_hi);
    const TrendSystem ts = fixture::segment();
    for (const Vector* w : {&*cb.w_lo, &*cb.w_hi}) {
        CHECK((ts.A_pre * *w - ts.b_pre).norm() <= 1e-8 * (1 + ts.b_pre.norm()));
        CHECK(w->sum() == doctest::Approx(1.0));
        CHECK(w->minCoeff() >= -1e-10);
    }
    CHECK(ts.a_post.dot(*cb.w_lo) == doctest::Approx(1.0));
    CHECK(ts.a_post.dot(*cb.w_hi) == doctest::Approx(2.0));
}

TEST_CASE("affine set: TWFE point, perturbed whole line, inconsistent empty") {
    Vector lambda(6);
    lambda << 0.3, 1.0, -0.5, 2.0, 2.5, 4.0;
    Vector gamma(4);
    gamma << 1, -1, 3, 0.5;
    const TrendSystem ts = fixture::twfe(lambda, gamma, 5);
    const IdentifiedInterval p = affine_trend_set(ts);
    CHECK(p.kind == Kind::Point);
    CHECK(p.lo == doctest::Approx(lambda(5) - lambda(4)));

    std::mt19937_64 rng(2);
    CHECK(affine_trend_set(perturbed_twfe(rng, 5, 6, 4)).kind == Kind::WholeLine);

    Matrix A_pre(2, 2);
    A_pre << 1, 1, 2, 2;
    Vector b_pre(2);
    b_pre << 1, 3;
    CHECK(affine_trend_set(fixture::system(A_pre, b_pre, Vector::Ones(2), 0)).kind == Kind::Empty);
}

TEST_CASE("effect set maps trend sets") {
    TrendSystem ts = fixture::segment();
    const IdentifiedInterval e = effect_set(IdentifiedInterval::interval(1, 2), ts);
    CHECK(e.kind == Kind::Interval);
    CHECK(e.lo == 0.0);
    CHECK(e.hi == 1.0);
    const IdentifiedInterval z = effect_set(IdentifiedInterval::point(2.0), ts);
    CHECK(z.kind == Kind::Point);
    CHECK(z.lo == 0.0);
    CHECK(effect_set(IdentifiedInterval::empty(), ts).kind == Kind::Empty);
    CHECK(effect_set(IdentifiedInterval::whole_line(), ts).kind == Kind::WholeLine);
}

TEST_CASE("identified interval helpers") {
    CHECK(IdentifiedInterval::interval(0, 2).contains(1));
    CHECK_FALSE(IdentifiedInterval::interval(0, 2).contains(2.1));
    CHECK(IdentifiedInterval::interval(0, 2).contains(2.1, 0.2));
    CHECK(IdentifiedInterval::whole_line().contains(1e300));
    CHECK_FALSE(IdentifiedInterval::empty().contains(0));
    CHECK(IdentifiedInterval::interval(1, 3).width() == 2.0);
    CHECK(std::isinf(IdentifiedInterval::whole_line().width()));
    CHECK(to_string(Kind::WholeLine) == "whole_line");
}

TEST_CASE("minimum-norm weights: examples") {
    std::mt19937_64 rng(3);
    const AffineWeights w = min_norm_affine_weights(random_twfe(rng, 4, 5, 4));
    CHECK((w.w - Vector::Constant(3, 1.0 / 3)).norm() <= 1e-10);
    CHECK(w.residual <= 1e-10);

    const AffineWeights one = min_norm_affine_weights(random_twfe(rng, 2, 5, 4));
    REQUIRE(one.w.size() == 1);
    CHECK(one.w(0) == doctest::Approx(1.0));

    Matrix A_pre(2, 2);
    A_pre << 1, 1, 2, 2;
    Vector b_pre(2);
    b_pre << 1, 3;
    try {
        min_norm_affine_weights(fixture::system(A_pre, b_pre, Vector::Ones(2), 0));
        FAIL("expected InfeasibleSystem");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InfeasibleSystem);
    }
}

TEST_CASE("minimum-norm weights beat null-space perturbations") {
    std::mt19937_64 rng(4);
    const int d = 6;
    const Matrix A_pre = oracle::normal_matrix(2, d, rng);
    const Vector b_pre = A_pre * oracle::dirichlet(d, rng);
    const TrendSystem ts = fixture::system(A_pre, b_pre, oracle::normal_vector(d, rng), 0.0);
    const AffineWeights w = min_norm_affine_weights(ts);
    CHECK(w.w.sum() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(w.residual == doctest::Approx((A_pre * w.w - b_pre).norm()));

    Matrix E(3, d);
    E << A_pre, Matrix::Ones(1, d);
    const Eigen::FullPivLU<Matrix> lu(E);
    const Matrix N = lu.kernel();
    for (int i = 0; i < 1000; ++i) {
        const Vector alt = w.w + N * oracle::normal_vector(N.cols(), rng);
        CHECK(w.w.norm() <= alt.norm() + 1e-12);
    }
}

TEST_CASE("span test: examples") {
    std::mt19937_64 rng(5);
    const TrendSystem ts = random_twfe(rng, 5, 6, 5);
    const SpanTestResult s = span_test_residual(ts);
    CHECK(s.in_span);
    CHECK(s.residual <= 1e-10);
    CHECK_FALSE(span_test_residual(perturbed_twfe(rng, 6, 5, 3)).in_span);
    CHECK(span_test_residual(random_twfe(rng, 2, 5, 4)).in_span);
    Matrix A_pre(1, 1);
    A_pre << 7;
    Vector a_post(1);
    a_post << -3;
    CHECK(span_test_residual(fixture::system(A_pre, Vector::Ones(1), a_post, 0)).in_span);
}

TEST_CASE("span test residual matches its definition") {
    std::mt19937_64 rng(6);
    for (int rep = 0; rep < 50; ++rep) {
        const TrendSystem ts = random_system(rng, 5, 2);
        const SpanTestResult s = span_test_residual(ts);
        Matrix D(ts.A_pre.cols(), ts.A_pre.rows() + 1);
        D << Vector::Ones(ts.A_pre.cols()), ts.A_pre.transpose();
        const double direct = (D * s.phi - ts.a_post).norm();
        CHECK(std::abs(direct - s.residual) <= 1e-10 * (1 + direct));
    }
}

TEST_CASE("dichotomy, nesting and dual consistency on random systems") {
    std::mt19937_64 rng(7);
    int points = 0;
    for (int rep = 0; rep < 400; ++rep) {
        TrendSystem ts;
        const int d = 1 + rep % 5;
        const int rows = 1 + (rep / 5) % 4;
        if (rep % 3 == 0) {
            ts = random_twfe(rng, d + 1, rows + 3, rows + 1);
        } else if (rep % 3 == 1 && d > rows) {
            // post trends in the span of [1 A_pre']
            ts = random_system(rng, d, rows);
            Vector phi = oracle::normal_vector(rows + 1, rng);
            ts.a_post = Vector::Constant(d, phi(0)) + ts.A_pre.transpose() * phi.tail(rows);
            ts.A.row(rows) = ts.a_post.transpose();
        } else {
            ts = random_system(rng, d, rows);
        }
        const IdentifiedInterval aff = affine_trend_set(ts);
        const IdentifiedInterval cvx = convex_trend_bounds(ts);
        CHECK(aff.kind != Kind::Interval);
        CHECK(nested(cvx, aff));
        if (aff.kind == Kind::Point) {
            ++points;
            const SpanTestResult s = span_test_residual(ts);
            Vector lead(ts.b_pre.size() + 1);
            lead << 1.0, ts.b_pre;
            CHECK(std::abs(aff.lo - lead.dot(s.phi)) <= 1e-8);
            CHECK(std::abs(aff.lo - ts.a_post.dot(min_norm_affine_weights(ts).w)) <= 1e-7 * (1 + std::abs(aff.lo)));
        }
        if (cvx.kind == Kind::Interval) CHECK(cvx.lo <= cvx.hi);
    }
    CHECK(points > 50);
}

TEST_CASE("convex bounds agree with vertex enumeration") {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 200; ++rep) {
        const TrendSystem ts = random_system(rng, 1 + rep % 5, 1 + rep % 3);
        const auto ref = oracle::convex_bounds(ts.A_pre, ts.b_pre, ts.a_post);
        const IdentifiedInterval got = convex_trend_bounds(ts);
        if (!ref) {
            CHECK(got.kind == Kind::Empty);
            continue;
        }
        REQUIRE(got.kind != Kind::Empty);
        CHECK(std::abs(got.lo - ref->first) <= 1e-6);
        CHECK(std::abs(got.hi - ref->second) <= 1e-6);
    }
}
