#include "spt/serialize.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace spt {

namespace {

Json number(double x) {
    return std::isfinite(x) ? Json(x) : Json(nullptr);
}

Json method(const MethodSummary& m, bool timing) {
    Json j{{"bias", number(m.bias)}, {"ci_length", number(m.ci_length)}, {"coverage", number(m.coverage)}};
    if (timing) j["runtime_seconds"] = number(m.runtime_seconds);
    return j;
}

std::string_view design_name(Design d) {
    switch (d) {
        case Design::Panel: return "panel";
        case Design::Rcs: return "rcs";
        case Design::Population: return "population";
    }
    return "unknown";
}

}  // namespace

Json to_json(const Vector& v) {
    Json a = Json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
    return a;
}

Json to_json(const Matrix& m) {
    Json a = Json::array();
    for (Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vector(m.row(i).transpose())));
    return a;
}

Json to_json(const CellStats& s) {
    Json counts = Json::array();
    for (Index k = 0; k < s.counts.rows(); ++k) {
        Json row = Json::array();
        for (Index t = 0; t < s.counts.cols(); ++t) row.push_back(s.counts(k, t));
        counts.push_back(row);
    }
    return Json{{"design", design_name(s.design)}, {"K", s.K},           {"T", s.T},
                {"n_total", s.n_total},            {"means", to_json(s.means)}, {"counts", counts},
                {"shares", to_json(s.shares)}};
}

Json to_json(const TrendSystem& ts) {
    return Json{{"n", ts.n},
                {"A_pre", to_json(ts.A_pre)},
                {"b_pre", to_json(ts.b_pre)},
                {"a_post", to_json(ts.a_post)},
                {"treated_T_mean", number(ts.treated_T_mean)},
                {"treated_T0_mean", number(ts.treated_T0_mean)}};
}

Json to_json(const IdentifiedInterval& set) {
    Json j{{"kind", to_string(set.kind)}};
    switch (set.kind) {
        case IdentifiedInterval::Kind::Point: j["value"] = number(set.lo); break;
        case IdentifiedInterval::Kind::Interval:
            j["lo"] = number(set.lo);
            j["hi"] = number(set.hi);
            break;
        default: break;
    }
    return j;
}

Json to_json(const SpanTestResult& r) {
    return Json{{"in_span", r.in_span}, {"residual", number(r.residual)}, {"phi", to_json(r.phi)}};
}

Json to_json(const AffineWeights& w) {
    return Json{{"w", to_json(w.w)}, {"residual", number(w.residual)}};
}

Json to_json(const InferenceConfig& cfg) {
    Json j{{"alpha", cfg.alpha}, {"varsigma", cfg.varsigma}, {"B", cfg.B}, {"eta", cfg.eta}, {"seed", cfg.seed}};
    if (cfg.grid) {
        j["grid"] = Json{{"lo", cfg.grid->lo}, {"hi", cfg.grid->hi}, {"n", cfg.grid->count}, {"source", "explicit"}};
    } else {
        j["grid"] = Json{{"n", cfg.default_grid_count}, {"source", "default"}};
    }
    j["qp_tol"] = cfg.qp_tol;
    j["qp_max_iter"] = cfg.qp_max_iter;
    j["perturbation"] = cfg.perturbation == Perturbation::Convex ? "convex" : "literal";
    if (cfg.perturbation == Perturbation::Literal) j["literal_starts"] = cfg.literal_starts;
    return j;
}

Json to_json(const ConfidenceSet& cs) {
    Json intervals = Json::array();
    for (const auto& [lo, hi] : cs.intervals) intervals.push_back(Json{{"lo", number(lo)}, {"hi", number(hi)}});
    Json grid = Json::array();
    for (const auto& c : cs.grid)
        grid.push_back(Json{{"tau", number(c.tau)},
                            {"statistic", number(c.statistic)},
                            {"critical_value", number(c.critical_value)},
                            {"accepted", c.accepted}});
    return Json{{"intervals", intervals},
                {"empty", cs.empty()},
                {"total_length", number(cs.total_length())},
                {"truncated_lo", cs.truncated_lo},
                {"truncated_hi", cs.truncated_hi},
                {"alpha", cs.alpha},
                {"varsigma", cs.varsigma},
                {"B", cs.B},
                {"seed", cs.seed},
                {"eta", cs.eta},
                {"s_n", number(cs.s_n)},
                {"n", cs.n},
                {"grid_range", Json{{"lo", number(cs.grid_spec.lo)}, {"hi", number(cs.grid_spec.hi)}, {"n", cs.grid_spec.count}}},
                {"grid", grid}};
}

Json to_json(const FeasibilityTestResult& r) {
    return Json{{"statistic", number(r.statistic)},   {"critical_value", number(r.critical_value)},
                {"reject", r.reject},                 {"p_value_proxy", number(r.p_value_proxy)},
                {"Q_hat", number(r.Q_hat)},           {"w_star", to_json(r.w_star.w)}};
}

Json to_json(const DidResult& r) {
    return Json{{"estimate", number(r.estimate)}, {"se", number(r.se)}, {"ci", Json::array({number(r.ci_lo), number(r.ci_hi)})}};
}

Json to_json(const ScWeights& r) {
    return Json{{"w", to_json(r.w.w)}, {"pretreatment_sse", number(r.pretreatment_sse)}};
}

Json to_json(const SdidWeights& r) {
    return Json{{"w0", number(r.w0)}, {"w", to_json(r.w.w)}, {"nu0", number(r.nu0)},
                {"nu", to_json(r.nu.w)}, {"zeta", number(r.zeta)}, {"rounds", r.objective_trace.size()}};
}

Json to_json(const PtViolation& r) {
    return Json{{"delta", to_json(r.delta)}};
}

Json to_json(const PlaceboCi& r) {
    return Json{{"estimate", number(r.estimate)}, {"se", number(r.se)}, {"ci", Json::array({number(r.lo), number(r.hi)})}};
}

Json to_json(const DgpSpec& spec) {
    Json j{{"dgp", to_string(spec.variant)}, {"K", spec.K}, {"T", spec.T}, {"T0", spec.T0},
           {"cell_n", spec.cell_n}, {"sigma", spec.sigma}, {"design_seed", spec.design_seed}};
    switch (spec.variant) {
        case DgpVariant::RcsPostViolation:
            j["violation"] = spec.violation ? Json(*spec.violation) : Json("auto");
            j["violation_mix"] = spec.violation_mix;
            break;
        case DgpVariant::PanelLowRank:
            j["rank"] = spec.rank;
            j["ar"] = Json::array({spec.ar1, spec.ar2});
            break;
        case DgpVariant::PanelSparseRelevant:
            j["rank"] = spec.rank;
            j["ar"] = Json::array({spec.ar1, spec.ar2});
            j["relevant"] = spec.relevant;
            j["post_shift"] = spec.post_shift;
            break;
        default: break;
    }
    if (spec.pre_shift != 0.0) j["pre_shift"] = spec.pre_shift;
    return j;
}

Json to_json(const McConfig& cfg, bool include_timing) {
    Json j{{"reps", cfg.reps}, {"seed", cfg.seed}, {"B", cfg.B},         {"grid_n", cfg.grid_n},
           {"alpha", cfg.alpha}, {"eta", cfg.eta}, {"varsigma", cfg.varsigma}, {"feasibility", cfg.feasibility}};
    if (include_timing) j["record_timing"] = true;
    return j;
}

Json to_json(const McReport& report) {
    const bool timing = report.config.record_timing;
    Json j{{"spec", to_json(report.spec)},
           {"config", to_json(report.config, timing)},
           {"reps", report.reps},
           {"methods", Json{{"did", method(report.did, timing)},
                            {"sc", method(report.sc, timing)},
                            {"sdid", method(report.sdid, timing)},
                            {"spt", method(report.spt, timing)}}},
           {"spt_empty", report.spt_empty},
           {"spt_truncated", report.spt_truncated}};
    if (report.feasibility_rejection_rate) j["feasibility_rejection_rate"] = *report.feasibility_rejection_rate;
    return j;
}

void write_grid_csv(std::ostream& out, const ConfidenceSet& cs) {
    out << "tau,statistic,critical_value,accepted\n" << std::setprecision(17);
    for (const auto& c : cs.grid) out << c.tau << ',' << c.statistic << ',' << c.critical_value << ',' << (c.accepted ? 1 : 0) << '\n';
}

void write_records_csv(std::ostream& out, const McReport& report) {
    out << "rep,seed,did_estimate,did_lo,did_hi,sc_estimate,sc_lo,sc_hi,sdid_estimate,sdid_lo,sdid_hi,"
           "spt_covers,spt_empty,spt_truncated,spt_lo,spt_hi,spt_length,feasibility_reject\n"
        << std::setprecision(17);
    for (const auto& r : report.records) {
        out << r.rep << ',' << r.seed << ',' << r.did_estimate << ',' << r.did_lo << ',' << r.did_hi << ',' << r.sc_estimate << ','
            << r.sc_lo << ',' << r.sc_hi << ',' << r.sdid_estimate << ',' << r.sdid_lo << ',' << r.sdid_hi << ','
            << (r.spt_covers ? 1 : 0) << ',' << (r.spt_empty ? 1 : 0) << ',' << (r.spt_truncated ? 1 : 0) << ',';
        if (r.spt_empty) {
            out << ",,";
        } else {
            out << r.spt_lo << ',' << r.spt_hi << ',';
        }
        out << r.spt_length << ',';
        if (r.feasibility_reject) out << (*r.feasibility_reject ? 1 : 0);
        out << '\n';
    }
}

}  // namespace spt
