#pragma once

#include "spt/baselines.hpp"
#include "spt/data.hpp"
#include "spt/infer.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spt {

enum class DgpVariant { RcsPt, RcsPostViolation, PanelLowRank, PanelSparseRelevant };

std::string_view to_string(DgpVariant v);
DgpVariant parse_dgp(std::string_view name);  // rcs_pt, rcs_post_violation, panel_low_rank, panel_sparse_relevant

struct DgpSpec {
    DgpVariant variant = DgpVariant::RcsPt;
    int K = 8;
    int T = 10;
    int T0 = 9;
    int cell_n = 200;   // observations per cell (RCS) or individuals per unit (panel)
    double sigma = 1.0; // within-cell outcome sd
    std::uint64_t design_seed = 1;  // fixes the population means; sampling noise uses the replication seed

    // RcsPostViolation: PT violation of the treated post trend; unset means
    // 1.1 times the analytic half-length of the 95% DID interval.
    std::optional<double> violation;
    double violation_mix = 0.5;  // weight on the extreme control in the true weights

    int rank = 4;               // panel factor rank
    double ar1 = 0.5;           // panel AR(2) noise coefficients
    double ar2 = 0.2;
    int relevant = 3;           // PanelSparseRelevant donors
    double post_shift = -5.0;   // PanelSparseRelevant post level of the others, relative to the treated

    double pre_shift = 0.0;     // added to the treated mean times t for pre-periods (hull violation)
};

// Throws InvalidSpec.
void validate(const DgpSpec& spec);

struct FactorModelSpec {
    Matrix lambda;  // T x F time factors
    Matrix gamma;   // K x F loadings
    Matrix cell_sd;               // K x T, RCS noise (empty for panel)
    Matrix covariance;            // T x T, panel noise (empty for RCS)
    Matrix treatment_effects;     // optional K x T additions (empty: none)
};

// Population means lambda * gamma' (plus effects), K x T.
Matrix factor_means(const FactorModelSpec& f);

struct PopulationDesign {
    Design design = Design::Rcs;
    Matrix means;       // K x T untreated means; the true effect is zero
    Matrix cell_sd;     // RCS
    Matrix covariance;  // panel
    Vector omega;       // weights satisfying the synthetic trend restriction, when they exist
};

PopulationDesign population_design(const DgpSpec& spec);

// Stationary AR(2) covariance with marginal variance sigma^2.
Matrix ar2_covariance(int T, double phi1, double phi2, double sigma);

// Analytic standard error of the pooled-control DID at the spec's cell sizes.
double analytic_did_se(const DgpSpec& spec);

Dataset generate_dataset(const DgpSpec& spec, std::uint64_t seed);
Dataset sample_dataset(const DgpSpec& spec, const PopulationDesign& pop, std::uint64_t seed);

CellStats twfe_population_stats(const Vector& lambda, const Vector& gamma);

struct PlaceboCi {
    double estimate = 0.0;
    double se = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

enum class PlaceboMethod { Sc, Sdid };

// Each control in turn plays the treated unit with the remaining controls as
// donors; the placebo estimates' variance gives a normal interval.
PlaceboCi placebo_ci(const CellStats& stats, int T0, PlaceboMethod method, std::optional<double> zeta = std::nullopt);

struct McConfig {
    int reps = 200;
    std::uint64_t seed = 0;
    int B = 200;
    int grid_n = 100;
    double alpha = 0.05;
    double eta = 0.25;
    double varsigma = 1e-6;
    bool feasibility = false;
    bool record_timing = false;
    unsigned threads = 1;
};

struct RepRecord {
    int rep = 0;
    std::uint64_t seed = 0;
    double did_estimate = 0.0, did_lo = 0.0, did_hi = 0.0;
    double sc_estimate = 0.0, sc_lo = 0.0, sc_hi = 0.0;
    double sdid_estimate = 0.0, sdid_lo = 0.0, sdid_hi = 0.0;
    bool spt_covers = false;
    bool spt_empty = false;
    bool spt_truncated = false;
    double spt_lo = 0.0, spt_hi = 0.0;  // hull of accepted grid points
    double spt_length = 0.0;            // total accepted length
    std::optional<bool> feasibility_reject;
};

struct MethodSummary {
    double bias = 0.0;
    double ci_length = 0.0;
    double coverage = 0.0;
    double runtime_seconds = 0.0;
};

struct McReport {
    DgpSpec spec;
    McConfig config;
    int reps = 0;
    MethodSummary did, sc, sdid, spt;
    int spt_empty = 0;
    int spt_truncated = 0;
    std::optional<double> feasibility_rejection_rate;
    std::vector<RepRecord> records;
};

McReport run_monte_carlo(const DgpSpec& spec, const McConfig& cfg);

}  // namespace spt
