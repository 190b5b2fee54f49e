#pragma once

#include "spt/data.hpp"
#include "spt/optim.hpp"

#include <optional>
#include <vector>

namespace spt {

// Control shares renormalized to sum to one over the controls.
struct PtWeights {
    SimplexPoint w;
};

PtWeights pt_weights(const CellStats& stats);
PtWeights pt_weights(const Dataset& data);

struct DidResult {
    double estimate = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

// Double difference of means between the last pre-period and the post period,
// pooling all control observations. Panel standard errors cluster on the
// individual; RCS standard errors add the four cell-mean variances.
DidResult did_estimate(const Dataset& data);

struct ScWeights {
    SimplexPoint w;
    double pretreatment_sse = 0.0;
};

// Simplex least squares on pre-period level means (periods 1..T0).
ScWeights sc_weights(const CellStats& stats, int T0, const QpOptions& opt = {});
double sc_estimate(const CellStats& stats, const ScWeights& sc);

struct SdidWeights {
    double w0 = 0.0;
    SimplexPoint w;
    double nu0 = 0.0;
    SimplexPoint nu;  // over periods 1..T0
    double zeta = 0.0;
    std::vector<double> objective_trace;  // unit-weight objective after each round
};

// sd of the first differences of control pre-period means, times (K-1)^(1/4).
double default_zeta(const CellStats& stats, int T0);

SdidWeights sdid_weights(const CellStats& stats, int T0, std::optional<double> zeta_override = std::nullopt,
                         const QpOptions& opt = {});

// Unit-weight SDID objective: sum over pre-periods of the squared intercepted
// fit error plus zeta * ||w||^2.
double sdid_objective(const CellStats& stats, int T0, double w0, const Vector& w, double zeta);

// sum_t nu_t mu_t^1 + sum_k w_k mu_T^k - sum_t sum_k nu_t w_k mu_t^k, with nu
// over the first nu.size() periods and w over the controls.
double two_way_counterfactual(const CellStats& stats, const Vector& nu, const Vector& w);

double sdid_estimate(const CellStats& stats, const SdidWeights& sdid);

struct PtViolation {
    Vector delta;  // pre-period entries, then the post entry
};

PtViolation pt_violation_vector(const TrendSystem& ts, const Vector& w, const PtWeights& ptw);

}  // namespace spt
