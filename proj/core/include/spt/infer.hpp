#pragma once

#include "spt/data.hpp"
#include "spt/identify.hpp"
#include "spt/optim.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace spt {

enum class Perturbation {
    Convex,   // perturb the estimated moments; the inner problem stays a convex QP
    Literal,  // m^2 + s * sqrt(n) * (bootstrap m^2 - m^2); indefinite, multi-start
};

struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    int count = 500;
};

struct InferenceConfig {
    double alpha = 0.05;
    double varsigma = 1e-6;
    int B = 1000;
    double eta = 0.25;  // s_n = n^-eta
    std::optional<GridSpec> grid;  // unset: default_grid
    int default_grid_count = 500;
    std::uint64_t seed = 0;
    double qp_tol = 1e-10;
    int qp_max_iter = 100000;
    Perturbation perturbation = Perturbation::Convex;
    int literal_starts = 16;
    bool unit_multipliers = false;  // debug: every multiplier equals one
    // Decide candidates from bounds on the bootstrap draws where the bounds
    // settle the decision; such candidates report a NaN critical value.
    // Convex perturbation only.
    bool screen = false;
    unsigned threads = 1;
};

// Throws InvalidArgument for out-of-range settings.
void validate_config(const InferenceConfig& cfg);

double step_size(std::int64_t n, double eta);

struct CriterionEval {
    double tau = 0.0;
    double Q_hat = 0.0;
    SimplexPoint w_star;
    double statistic = 0.0;  // sqrt(n) * Q_hat
};

// A w - b + tau * e_last.
Vector moment_vector(const SimplexPoint& w, const Matrix& A, const Vector& b, double tau);

CriterionEval profiled_criterion(const TrendSystem& ts, double tau, const InferenceConfig& cfg);

// Bootstrap analogs of the trend system, one per replication. Replication r
// uses multipliers seeded by derive_seed(seed, r), so draws are shared by every
// candidate effect and do not depend on the worker count.
class BootstrapEnsemble {
public:
    BootstrapEnsemble(const Dataset& data, const TrendSystem& ts, const InferenceConfig& cfg);

    [[nodiscard]] int size() const { return static_cast<int>(A_boot_.size()); }
    [[nodiscard]] double s() const { return s_; }
    [[nodiscard]] double root_n() const { return root_n_; }
    [[nodiscard]] const TrendSystem& estimate() const { return ts_; }
    [[nodiscard]] const Matrix& A_boot(int r) const { return A_boot_[static_cast<std::size_t>(r)]; }
    [[nodiscard]] const Vector& b_boot(int r) const { return b_boot_[static_cast<std::size_t>(r)]; }

    // Perturbed system A_hat + s g_A and b_hat + s g_b with g = sqrt(n) (boot - hat).
    [[nodiscard]] Matrix perturbed_A(int r) const;
    [[nodiscard]] Vector perturbed_b(int r) const;

private:
    TrendSystem ts_;
    double s_ = 0.0;
    double root_n_ = 1.0;
    std::vector<Matrix> A_boot_;
    std::vector<Vector> b_boot_;
};

// Objectives of the two perturbation schemes at a fixed weight vector
// (before subtracting Q_hat and dividing by s).
double convex_perturbed_objective(const BootstrapEnsemble& ens, int r, const Vector& w, double tau);
double literal_perturbed_objective(const BootstrapEnsemble& ens, int r, const Vector& w, double tau);
// Same, with an explicit step size in place of the ensemble's s.
double convex_perturbed_objective(const BootstrapEnsemble& ens, int r, const Vector& w, double tau, double s);
double literal_perturbed_objective(const BootstrapEnsemble& ens, int r, const Vector& w, double tau, double s);

struct CandidateTest {
    double tau = 0.0;
    double statistic = 0.0;
    double critical_value = 0.0;
    bool accepted = false;
};

// Tests each candidate against the shared ensemble. Replications run in
// parallel; candidates are visited in the given order within a replication.
std::vector<CandidateTest> test_candidates(const BootstrapEnsemble& ens, const std::vector<double>& taus, const InferenceConfig& cfg);

// Bootstrap draws of the numerical directional derivative at one candidate.
std::vector<double> bootstrap_derivatives(const BootstrapEnsemble& ens, double tau, const InferenceConfig& cfg);

double bootstrap_critical_value(const Dataset& data, const TrendSystem& ts, double tau, const InferenceConfig& cfg);

struct ConfidenceSet {
    std::vector<CandidateTest> grid;
    std::vector<std::pair<double, double>> intervals;
    GridSpec grid_spec;
    double alpha = 0.0;
    double varsigma = 0.0;
    int B = 0;
    double eta = 0.0;
    double s_n = 0.0;
    std::int64_t n = 0;
    std::uint64_t seed = 0;
    bool truncated_lo = false;  // first grid point accepted
    bool truncated_hi = false;  // last grid point accepted

    [[nodiscard]] bool empty() const { return intervals.empty(); }
    [[nodiscard]] double total_length() const;
};

// Maximal runs of accepted grid points.
std::vector<std::pair<double, double>> accepted_runs(const std::vector<CandidateTest>& grid);

std::vector<double> grid_points(const GridSpec& g);

// Centered at the DID estimate. The half-width is the larger of 4 standard
// errors and the distance to the far end of the estimated convex effect set
// (or to the criterion minimizer when that set is empty) plus 2 standard errors.
GridSpec default_grid(const Dataset& data, const TrendSystem& ts, int count);

// With a default grid, confidence_set doubles the half-width while an end
// point is accepted, at most this many times.
inline constexpr int kMaxGridExpansions = 6;

ConfidenceSet confidence_set(const Dataset& data, const InferenceConfig& cfg);

// Confidence set on a prebuilt ensemble, with extra candidates tested against
// the same draws (used to check coverage of a known effect).
struct ConfidenceSetWithProbes {
    ConfidenceSet cs;
    std::vector<CandidateTest> probes;
};
ConfidenceSetWithProbes confidence_set_with_probes(const Dataset& data, const InferenceConfig& cfg, const std::vector<double>& probes);

struct FeasibilityTestResult {
    double statistic = 0.0;
    double critical_value = 0.0;
    bool reject = false;
    double p_value_proxy = 1.0;  // share of bootstrap draws >= statistic
    double Q_hat = 0.0;
    SimplexPoint w_star;
};

FeasibilityTestResult feasibility_test(const Dataset& data, const InferenceConfig& cfg);

}  // namespace spt
