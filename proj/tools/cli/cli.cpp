#include "cli.hpp"

#include "spt/baselines.hpp"
#include "spt/error.hpp"
#include "spt/identify.hpp"
#include "spt/infer.hpp"
#include "spt/parallel.hpp"
#include "spt/serialize.hpp"
#include "spt/sim.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>

namespace spt::cli {

namespace {

// Raised for invalid flag combinations found after parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string out_path;
    std::string config_path;
    std::optional<unsigned> threads;
};

struct DataFlags {
    std::string input;
    std::string design;
    CsvSchema schema;
};

struct InferFlags {
    InferenceConfig cfg;
    std::optional<double> grid_lo;
    std::optional<double> grid_hi;
    std::string perturbation = "convex";
    std::string csv_path;
};

struct SimFlags {
    DgpSpec spec;
    McConfig mc;
    std::string dgp = "rcs_pt";
    std::optional<double> violation;
    std::string csv_path;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--out", c.out_path, "Write the JSON document to this file instead of stdout");
    sub->add_option("--config", c.config_path, "JSON object of flag values (keys are flag names without dashes)");
    sub->add_option("--threads", c.threads, "Worker threads (default: SPT_THREADS, else 1)")->check(CLI::PositiveNumber);
}

void add_data(CLI::App* sub, DataFlags& d) {
    sub->add_option("--input", d.input, "Long-format CSV");
    sub->add_option("--design", d.design, "panel or rcs")->check(CLI::IsMember({"panel", "rcs"}));
    sub->add_option("--col-id", d.schema.col_id, "Individual id column (panel)")->capture_default_str();
    sub->add_option("--col-unit", d.schema.col_unit, "Unit column")->capture_default_str();
    sub->add_option("--col-period", d.schema.col_period, "Period column")->capture_default_str();
    sub->add_option("--col-outcome", d.schema.col_outcome, "Outcome column")->capture_default_str();
    sub->add_option("--treated-unit", d.schema.treated_unit, "Label of the treated unit");
    sub->add_option("--t0", d.schema.t0, "Label of the last pre-treatment period");
}

void add_bootstrap(CLI::App* sub, InferenceConfig& cfg) {
    sub->add_option("--alpha", cfg.alpha, "Significance level")->capture_default_str();
    sub->add_option("--b", cfg.B, "Bootstrap replications")->capture_default_str();
    sub->add_option("--eta", cfg.eta, "Step size exponent, s_n = n^-eta")->capture_default_str();
    sub->add_option("--varsigma", cfg.varsigma, "Uniformity factor")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "Bootstrap seed")->capture_default_str();
    sub->add_option("--qp-tol", cfg.qp_tol, "QP stopping tolerance")->capture_default_str();
    sub->add_option("--qp-max-iter", cfg.qp_max_iter, "QP iteration cap")->capture_default_str();
}

// Values from --config fill options that were not given on the command line.
void apply_config_file(CLI::App* sub, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path);
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::exception& e) {
        throw UsageError("config file " + path + ": " + e.what());
    }
    if (!doc.is_object()) throw UsageError("config file " + path + " must hold a JSON object");
    for (const auto& [key, value] : doc.items()) {
        CLI::Option* opt = key == "config" ? nullptr : sub->get_option_no_throw("--" + key);
        if (opt == nullptr) throw UsageError("unknown config key '" + key + "'");
        if (opt->count() > 0) continue;
        if (value.is_object() || value.is_array() || value.is_null()) throw UsageError("config key '" + key + "' needs a scalar value");
        try {
            opt->add_result(value.is_string() ? value.get<std::string>() : value.dump());
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw UsageError("config key '" + key + "': " + e.what());
        }
    }
}

void require(bool ok, const std::string& what) {
    if (!ok) throw UsageError(what);
}

Dataset load(const DataFlags& d) {
    require(!d.input.empty(), "--input is required");
    require(!d.design.empty(), "--design is required");
    require(!d.schema.treated_unit.empty(), "--treated-unit is required");
    require(!d.schema.t0.empty(), "--t0 is required");
    if (d.design == "panel") return load_panel_csv(std::filesystem::path(d.input), d.schema);
    return load_rcs_csv(std::filesystem::path(d.input), d.schema);
}

Json data_config(const DataFlags& d) {
    Json cols{{"unit", d.schema.col_unit}, {"period", d.schema.col_period}, {"outcome", d.schema.col_outcome}};
    if (d.design == "panel") cols["id"] = d.schema.col_id;
    return Json{{"input", d.input}, {"design", d.design}, {"columns", cols}, {"treated_unit", d.schema.treated_unit}, {"t0", d.schema.t0}};
}

Json data_summary(const Dataset& data) {
    const auto& units = std::visit([](const auto& x) -> const std::vector<std::string>& { return x.unit_labels; }, data);
    const auto& periods = std::visit([](const auto& x) -> const std::vector<std::string>& { return x.period_labels; }, data);
    return Json{{"K", dataset_K(data)}, {"T", dataset_T(data)}, {"T0", dataset_T0(data)}, {"n", sample_size(data)},
                {"units", units},       {"periods", periods}};
}

void emit(const Json& doc, const Common& c, std::ostream& out) {
    const std::string text = doc.dump(2) + "\n";
    if (c.out_path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(c.out_path, std::ios::binary);
    if (!file) throw Error(ErrorCode::Io, "cannot write " + c.out_path);
    file << text;
}

std::ofstream open_side_file(const std::string& path) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error(ErrorCode::Io, "cannot write " + path);
    return file;
}

int cmd_identify(const DataFlags& d, const Common& c, std::ostream& out) {
    const Dataset data = load(d);
    const TrendSystem ts = build_trend_system(data);
    const IdentifiedInterval affine = affine_trend_set(ts);
    const ConvexBounds convex = convex_trend_bounds_detail(ts);

    Json doc{{"command", "identify"}, {"config", Json{{"data", data_config(d)}}}, {"data", data_summary(data)}};
    doc["affine_set"] = to_json(affine);
    doc["convex_set"] = to_json(convex.set);
    if (convex.w_lo && convex.w_hi) doc["convex_weights"] = Json{{"lo", to_json(*convex.w_lo)}, {"hi", to_json(*convex.w_hi)}};
    doc["effect_set"] = to_json(effect_set(convex.set, ts));
    doc["affine_effect_set"] = to_json(effect_set(affine, ts));
    doc["span_test"] = to_json(span_test_residual(ts));
    try {
        doc["min_norm_weights"] = to_json(min_norm_affine_weights(ts));
    } catch (const Error& e) {
        if (e.code() != ErrorCode::InfeasibleSystem) throw;
        doc["min_norm_weights"] = nullptr;
    }
    const bool refuted = convex.set.kind == IdentifiedInterval::Kind::Empty;
    doc["refuted"] = refuted;
    emit(doc, c, out);
    return refuted ? kRefuted : kOk;
}

int cmd_infer(const DataFlags& d, InferFlags& f, const Common& c, std::ostream& out) {
    require(f.grid_lo.has_value() == f.grid_hi.has_value(), "--grid-lo and --grid-hi go together");
    if (f.grid_lo) f.cfg.grid = GridSpec{*f.grid_lo, *f.grid_hi, f.cfg.default_grid_count};
    f.cfg.perturbation = f.perturbation == "literal" ? Perturbation::Literal : Perturbation::Convex;
    f.cfg.threads = resolve_threads(c.threads);
    validate_config(f.cfg);
    const Dataset data = load(d);
    const ConfidenceSet cs = confidence_set(data, f.cfg);

    Json doc{{"command", "infer"},
             {"config", Json{{"data", data_config(d)}, {"inference", to_json(f.cfg)}}},
             {"data", data_summary(data)},
             {"confidence_set", to_json(cs)}};
    emit(doc, c, out);
    if (!f.csv_path.empty()) {
        std::ofstream file = open_side_file(f.csv_path);
        write_grid_csv(file, cs);
    }
    return cs.empty() ? kRefuted : kOk;
}

int cmd_feasibility(const DataFlags& d, InferenceConfig& cfg, const Common& c, std::ostream& out) {
    cfg.threads = resolve_threads(c.threads);
    validate_config(cfg);
    const Dataset data = load(d);
    const FeasibilityTestResult res = feasibility_test(data, cfg);
    Json icfg = to_json(cfg);
    icfg.erase("grid");  // no candidate effects are tested
    Json doc{{"command", "feasibility"},
             {"config", Json{{"data", data_config(d)}, {"inference", icfg}}},
             {"data", data_summary(data)},
             {"feasibility", to_json(res)}};
    emit(doc, c, out);
    return res.reject ? kRefuted : kOk;
}

int cmd_baselines(const DataFlags& d, std::optional<double> zeta, const Common& c, std::ostream& out) {
    if (zeta) require(*zeta >= 0.0, "--zeta must be nonnegative");
    const Dataset data = load(d);
    const CellStats stats = cell_means(data);
    const TrendSystem ts = build_trend_system(data);
    const int T0 = dataset_T0(data);
    const PtWeights ptw = pt_weights(stats);
    const ScWeights sc = sc_weights(stats, T0);
    const SdidWeights sdid = sdid_weights(stats, T0, zeta);

    Json cfg{{"data", data_config(d)}, {"zeta", zeta ? Json(*zeta) : Json("default")}};
    Json sc_json = to_json(sc);
    sc_json["estimate"] = sc_estimate(stats, sc);
    Json sdid_json = to_json(sdid);
    sdid_json["estimate"] = sdid_estimate(stats, sdid);
    Json doc{{"command", "baselines"},
             {"config", cfg},
             {"data", data_summary(data)},
             {"pt_weights", to_json(ptw.w.w)},
             {"did", to_json(did_estimate(data))},
             {"sc", sc_json},
             {"sdid", sdid_json},
             {"pt_violation", Json{{"sc", to_json(pt_violation_vector(ts, sc.w.w, ptw).delta)},
                                   {"sdid", to_json(pt_violation_vector(ts, sdid.w.w, ptw).delta)}}}};
    emit(doc, c, out);
    return kOk;
}

int cmd_simulate(SimFlags& f, const Common& c, std::ostream& out) {
    try {
        f.spec.variant = parse_dgp(f.dgp);
    } catch (const Error&) {
        throw UsageError("unknown --dgp '" + f.dgp + "'");
    }
    f.spec.violation = f.violation;
    f.mc.threads = resolve_threads(c.threads);
    validate(f.spec);
    const McReport report = run_monte_carlo(f.spec, f.mc);
    Json doc{{"command", "simulate"}};
    const Json body = to_json(report);
    for (const auto& [k, v] : body.items()) doc[k] = v;
    emit(doc, c, out);
    if (!f.csv_path.empty()) {
        std::ofstream file = open_side_file(f.csv_path);
        write_records_csv(file, report);
    }
    return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Synthetic parallel trends: identified sets, confidence sets and baselines", "spt"};
    app.require_subcommand(1, 1);

    Common common;
    DataFlags data;
    InferFlags infer;
    InferenceConfig feas_cfg;
    std::optional<double> zeta;
    SimFlags sim;

    CLI::App* identify = app.add_subcommand("identify", "Identified sets of the post-period trend and the effect");
    add_data(identify, data);
    add_common(identify, common);

    CLI::App* inf = app.add_subcommand("infer", "Confidence set for the effect by test inversion");
    add_data(inf, data);
    add_common(inf, common);
    add_bootstrap(inf, infer.cfg);
    inf->add_option("--grid-lo", infer.grid_lo, "Lowest candidate effect (default grid when unset)");
    inf->add_option("--grid-hi", infer.grid_hi, "Highest candidate effect");
    inf->add_option("--grid-n", infer.cfg.default_grid_count, "Number of candidate effects")->capture_default_str();
    inf->add_option("--perturbation", infer.perturbation, "convex or literal")
        ->check(CLI::IsMember({"convex", "literal"}))
        ->capture_default_str();
    inf->add_option("--literal-starts", infer.cfg.literal_starts, "Random starts for the literal perturbation")->capture_default_str();
    inf->add_option("--csv", infer.csv_path, "Also write the criterion profile as CSV");

    CLI::App* feas = app.add_subcommand("feasibility", "Test whether convex weights can reproduce the pre-trends");
    add_data(feas, data);
    add_common(feas, common);
    add_bootstrap(feas, feas_cfg);

    CLI::App* base = app.add_subcommand("baselines", "PT, DID, SC and SDID weights and estimates");
    add_data(base, data);
    add_common(base, common);
    base->add_option("--zeta", zeta, "SDID ridge penalty (default: data-driven)");

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo coverage study on a synthetic design");
    add_common(simulate, common);
    simulate->add_option("--dgp", sim.dgp, "rcs_pt, rcs_post_violation, panel_low_rank or panel_sparse_relevant")->capture_default_str();
    simulate->add_option("--reps", sim.mc.reps, "Replications")->capture_default_str();
    simulate->add_option("--seed", sim.mc.seed, "Master seed")->capture_default_str();
    simulate->add_option("--b", sim.mc.B, "Bootstrap replications")->capture_default_str();
    simulate->add_option("--grid-n", sim.mc.grid_n, "Candidate effects per confidence set")->capture_default_str();
    simulate->add_option("--alpha", sim.mc.alpha, "Significance level")->capture_default_str();
    simulate->add_option("--eta", sim.mc.eta, "Step size exponent")->capture_default_str();
    simulate->add_option("--varsigma", sim.mc.varsigma, "Uniformity factor")->capture_default_str();
    simulate->add_flag("--feasibility", sim.mc.feasibility, "Also run the feasibility test per replication");
    simulate->add_flag("--record-timing", sim.mc.record_timing, "Report per-method runtime (not reproducible)");
    simulate->add_option("--k", sim.spec.K, "Units including the treated one")->capture_default_str();
    simulate->add_option("--t", sim.spec.T, "Periods")->capture_default_str();
    simulate->add_option("--t0", sim.spec.T0, "Last pre-treatment period (1-based)")->capture_default_str();
    simulate->add_option("--cell-n", sim.spec.cell_n, "Observations per cell (RCS) or individuals per unit (panel)")->capture_default_str();
    simulate->add_option("--sigma", sim.spec.sigma, "Outcome noise sd")->capture_default_str();
    simulate->add_option("--design-seed", sim.spec.design_seed, "Seed of the population design")->capture_default_str();
    simulate->add_option("--violation", sim.violation, "Post-period PT violation (rcs_post_violation)");
    simulate->add_option("--violation-mix", sim.spec.violation_mix, "Weight on the extreme control")->capture_default_str();
    simulate->add_option("--rank", sim.spec.rank, "Factor rank (panel designs)")->capture_default_str();
    simulate->add_option("--relevant", sim.spec.relevant, "Relevant donors (panel_sparse_relevant)")->capture_default_str();
    simulate->add_option("--post-shift", sim.spec.post_shift, "Post-period shift of the other donors")->capture_default_str();
    simulate->add_option("--pre-shift", sim.spec.pre_shift, "Per-period drift added to the treated pre-period means")->capture_default_str();
    simulate->add_option("--csv", sim.csv_path, "Also write per-replication records as CSV");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
        CLI::App* sub = app.get_subcommands().front();
        if (!common.config_path.empty()) apply_config_file(sub, common.config_path);

        if (sub == identify) return cmd_identify(data, common, out);
        if (sub == inf) return cmd_infer(data, infer, common, out);
        if (sub == feas) return cmd_feasibility(data, feas_cfg, common, out);
        if (sub == base) return cmd_baselines(data, zeta, common, out);
        return cmd_simulate(sim, common, out);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "spt: " << e.what() << "\n";
        return kInvalid;
    } catch (const UsageError& e) {
        err << "spt: " << e.what() << "\n";
        return kInvalid;
    } catch (const Error& e) {
        err << "spt: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        err << "spt: internal error: " << e.what() << "\n";
        return kInternal;
    }
}

}  // namespace spt::cli
