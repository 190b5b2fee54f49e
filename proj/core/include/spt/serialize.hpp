#pragma once

#include "spt/baselines.hpp"
#include "spt/data.hpp"
#include "spt/identify.hpp"
#include "spt/infer.hpp"
#include "spt/sim.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>

namespace spt {

// Key order follows insertion so documents read top-down; non-finite numbers
// become null.
using Json = nlohmann::ordered_json;

Json to_json(const Vector& v);
Json to_json(const Matrix& m);  // array of rows
Json to_json(const CellStats& s);
Json to_json(const TrendSystem& ts);
Json to_json(const IdentifiedInterval& set);
Json to_json(const SpanTestResult& r);
Json to_json(const AffineWeights& w);
Json to_json(const InferenceConfig& cfg);  // excludes the worker count
Json to_json(const ConfidenceSet& cs);
Json to_json(const FeasibilityTestResult& r);
Json to_json(const DidResult& r);
Json to_json(const ScWeights& r);
Json to_json(const SdidWeights& r);
Json to_json(const PtViolation& r);
Json to_json(const PlaceboCi& r);
Json to_json(const DgpSpec& spec);
Json to_json(const McConfig& cfg, bool include_timing);  // excludes the worker count
Json to_json(const McReport& report);

void write_grid_csv(std::ostream& out, const ConfidenceSet& cs);
void write_records_csv(std::ostream& out, const McReport& report);

}  // namespace spt
