#include "spt/serialize.hpp"

#include "../fixtures/fixtures.hpp"

#include <doctest.h>

#include <limits>
#include <sstream>

using namespace spt;

TEST_CASE("identified intervals") {
    CHECK(to_json(IdentifiedInterval::empty()).dump() == R"({"kind":"empty"})");
    CHECK(to_json(IdentifiedInterval::point(1.5)).dump() == R"({"kind":"point","value":1.5})");
    CHECK(to_json(IdentifiedInterval::interval(1, 2)).dump() == R"({"kind":"interval","lo":1.0,"hi":2.0})");
    CHECK(to_json(IdentifiedInterval::whole_line()).dump() == R"({"kind":"whole_line"})");
}

TEST_CASE("non-finite numbers become null") {
    Vector v(2);
    v << 1.0, std::numeric_limits<double>::quiet_NaN();
    CHECK(to_json(v).dump() == "[1.0,null]");
    Matrix m(2, 1);
    m << 1, 2;
    CHECK(to_json(m).dump() == "[[1.0],[2.0]]");
}

TEST_CASE("inference config echo omits the worker count") {
    InferenceConfig a;
    InferenceConfig b;
    b.threads = 8;
    CHECK(to_json(a).dump() == to_json(b).dump());
    CHECK(to_json(a)["grid"]["source"] == "default");
    a.grid = GridSpec{-1, 1, 5};
    CHECK(to_json(a)["grid"]["source"] == "explicit");
    CHECK_FALSE(to_json(a).contains("threads"));
}

TEST_CASE("confidence set document and grid CSV") {
    ConfidenceSet cs;
    cs.grid = {{0.0, 1.0, 2.0, true}, {1.0, 5.0, 2.0, false}};
    cs.intervals = accepted_runs(cs.grid);
    cs.grid_spec = GridSpec{0, 1, 2};
    const Json j = to_json(cs);
    CHECK(j["empty"] == false);
    CHECK(j["intervals"].size() == 1);
    CHECK(j["grid"][1]["accepted"] == false);
    std::ostringstream out;
    write_grid_csv(out, cs);
    CHECK(out.str() == "tau,statistic,critical_value,accepted\n0,1,2,1\n1,5,2,0\n");
}

TEST_CASE("Monte Carlo report: timing only on request") {
    McReport r;
    r.reps = 3;
    r.spt.runtime_seconds = 1.25;
    CHECK_FALSE(to_json(r)["methods"]["spt"].contains("runtime_seconds"));
    r.config.record_timing = true;
    CHECK(to_json(r)["methods"]["spt"]["runtime_seconds"] == 1.25);
    CHECK(to_json(r)["spec"]["dgp"] == "rcs_pt");

    r.records.resize(1);
    r.records[0].spt_empty = true;
    std::ostringstream out;
    write_records_csv(out, r);
    const std::string text = out.str();
    CHECK(text.substr(0, 4) == "rep,");
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

TEST_CASE("trend system and cell stats documents") {
    const TrendSystem ts = fixture::segment();
    const Json j = to_json(ts);
    CHECK(j["a_post"].size() == 3);
    const Json s = to_json(population_stats(Matrix::Ones(2, 3)));
    CHECK(s["design"] == "population");
    CHECK(s["means"].size() == 2);
}
