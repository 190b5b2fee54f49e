#include "spt/data.hpp"

#include "spt/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <optional>
#include <unordered_map>

namespace spt {

namespace {

std::vector<std::string> split_record(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.push_back(std::move(field));
    for (auto& f : fields) {
        const auto first = f.find_first_not_of(" \t\r");
        const auto last = f.find_last_not_of(" \t\r");
        f = first == std::string::npos ? std::string() : f.substr(first, last - first + 1);
    }
    return fields;
}

std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const char* begin = s.data();
    if (*begin == '+') ++begin;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;

    std::size_t column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw Error(ErrorCode::MissingColumn, "column '" + name + "' not found");
        return static_cast<std::size_t>(it - header.begin());
    }
};

Table read_table(std::istream& in) {
    Table table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fields = split_record(line);
        if (table.header.empty()) {
            table.header = std::move(fields);
            continue;
        }
        if (fields.size() != table.header.size())
            throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(line_no) + ": expected " +
                                                        std::to_string(table.header.size()) + " fields");
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line_no);
    }
    if (table.header.empty()) throw Error(ErrorCode::InvalidArgument, "empty CSV: header row required");
    return table;
}

// Sorted distinct labels; numeric order when every label parses as a number.
std::vector<std::string> ordered_labels(std::vector<std::string> labels) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    const bool numeric = std::all_of(labels.begin(), labels.end(), [](const std::string& s) { return parse_number(s).has_value(); });
    if (numeric) {
        std::stable_sort(labels.begin(), labels.end(),
                         [](const std::string& a, const std::string& b) { return *parse_number(a) < *parse_number(b); });
    }
    return labels;
}

struct Labeling {
    std::vector<std::string> units;    // treated first
    std::vector<std::string> periods;  // chronological
    std::unordered_map<std::string, int> unit_index;
    std::unordered_map<std::string, int> period_index;
    int T0 = 0;
};

Labeling make_labeling(const Table& table, std::size_t unit_col, std::size_t period_col, const CsvSchema& schema) {
    if (schema.treated_unit.empty()) throw Error(ErrorCode::InvalidArgument, "treated unit label is required");
    if (schema.t0.empty()) throw Error(ErrorCode::InvalidArgument, "last pre-treatment period (t0) is required");
    std::vector<std::string> units;
    std::vector<std::string> periods;
    units.reserve(table.rows.size());
    periods.reserve(table.rows.size());
    for (const auto& r : table.rows) {
        units.push_back(r[unit_col]);
        periods.push_back(r[period_col]);
    }
    Labeling lab;
    auto sorted_units = ordered_labels(std::move(units));
    const auto treated = std::find(sorted_units.begin(), sorted_units.end(), schema.treated_unit);
    if (treated == sorted_units.end())
        throw Error(ErrorCode::InvalidArgument, "treated unit '" + schema.treated_unit + "' has no rows");
    lab.units.push_back(*treated);
    for (const auto& u : sorted_units)
        if (u != schema.treated_unit) lab.units.push_back(u);
    lab.periods = ordered_labels(std::move(periods));
    for (std::size_t k = 0; k < lab.units.size(); ++k) lab.unit_index[lab.units[k]] = static_cast<int>(k);
    for (std::size_t t = 0; t < lab.periods.size(); ++t) lab.period_index[lab.periods[t]] = static_cast<int>(t);
    const auto t0 = lab.period_index.find(schema.t0);
    if (t0 == lab.period_index.end()) throw Error(ErrorCode::InvalidArgument, "t0 period '" + schema.t0 + "' has no rows");
    lab.T0 = t0->second + 1;
    return lab;
}

double parse_outcome(const std::string& s, std::size_t line_no) {
    const auto v = parse_number(s);
    if (!v || !std::isfinite(*v))
        throw Error(ErrorCode::NonFiniteInput, "line " + std::to_string(line_no) + ": outcome '" + s + "' is not a finite number");
    return *v;
}

std::ifstream open_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
    return in;
}

}  // namespace

PanelDataset load_panel_csv(std::istream& in, const CsvSchema& schema) {
    const Table table = read_table(in);
    const auto id_col = table.column(schema.col_id);
    const auto unit_col = table.column(schema.col_unit);
    const auto period_col = table.column(schema.col_period);
    const auto outcome_col = table.column(schema.col_outcome);
    const Labeling lab = make_labeling(table, unit_col, period_col, schema);
    const int T = static_cast<int>(lab.periods.size());

    // Individuals keep first-appearance order.
    std::unordered_map<std::string, std::size_t> individual;
    std::vector<std::string> ids;
    std::vector<int> unit;
    std::vector<std::vector<std::optional<double>>> values;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto line_no = table.line_numbers[r];
        const int k = lab.unit_index.at(row[unit_col]);
        const int t = lab.period_index.at(row[period_col]);
        auto [it, inserted] = individual.try_emplace(row[id_col], ids.size());
        if (inserted) {
            ids.push_back(row[id_col]);
            unit.push_back(k);
            values.emplace_back(static_cast<std::size_t>(T));
        } else if (unit[it->second] != k) {
            throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(line_no) + ": id '" + row[id_col] + "' changes unit");
        }
        auto& slot = values[it->second][static_cast<std::size_t>(t)];
        if (slot) throw Error(ErrorCode::UnbalancedPanel, "id '" + row[id_col] + "' repeats period '" + row[period_col] + "'");
        slot = parse_outcome(row[outcome_col], line_no);
    }

    PanelDataset data;
    data.K = static_cast<int>(lab.units.size());
    data.T = T;
    data.T0 = lab.T0;
    data.unit_labels = lab.units;
    data.period_labels = lab.periods;
    data.outcomes.resize(static_cast<Index>(ids.size()), T);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (int t = 0; t < T; ++t) {
            const auto& v = values[i][static_cast<std::size_t>(t)];
            if (!v) throw Error(ErrorCode::UnbalancedPanel, "id '" + ids[i] + "' lacks period '" + lab.periods[static_cast<std::size_t>(t)] + "'");
            data.outcomes(static_cast<Index>(i), t) = *v;
        }
    }
    data.ids = std::move(ids);
    data.unit = std::move(unit);
    validate(data);
    return data;
}

PanelDataset load_panel_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    auto in = open_csv(path);
    return load_panel_csv(in, schema);
}

RcsDataset load_rcs_csv(std::istream& in, const CsvSchema& schema) {
    const Table table = read_table(in);
    const auto unit_col = table.column(schema.col_unit);
    const auto period_col = table.column(schema.col_period);
    const auto outcome_col = table.column(schema.col_outcome);
    const Labeling lab = make_labeling(table, unit_col, period_col, schema);

    RcsDataset data;
    data.K = static_cast<int>(lab.units.size());
    data.T = static_cast<int>(lab.periods.size());
    data.T0 = lab.T0;
    data.unit_labels = lab.units;
    data.period_labels = lab.periods;
    data.outcome.resize(static_cast<Index>(table.rows.size()));
    data.unit.reserve(table.rows.size());
    data.period.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        data.unit.push_back(lab.unit_index.at(row[unit_col]));
        data.period.push_back(lab.period_index.at(row[period_col]));
        data.outcome(static_cast<Index>(r)) = parse_outcome(row[outcome_col], table.line_numbers[r]);
    }
    validate(data);
    return data;
}

RcsDataset load_rcs_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    auto in = open_csv(path);
    return load_rcs_csv(in, schema);
}

void write_long_csv(std::ostream& out, const Dataset& data) {
    out << std::setprecision(17);
    if (const auto* panel = std::get_if<PanelDataset>(&data)) {
        out << "id,unit,period,outcome\n";
        for (std::size_t i = 0; i < panel->size(); ++i)
            for (int t = 0; t < panel->T; ++t)
                out << panel->ids[i] << ',' << panel->unit_labels[static_cast<std::size_t>(panel->unit[i])] << ','
                    << panel->period_labels[static_cast<std::size_t>(t)] << ',' << panel->outcomes(static_cast<Index>(i), t) << '\n';
        return;
    }
    const auto& rcs = std::get<RcsDataset>(data);
    out << "unit,period,outcome\n";
    for (std::size_t i = 0; i < rcs.size(); ++i)
        out << rcs.unit_labels[static_cast<std::size_t>(rcs.unit[i])] << ',' << rcs.period_labels[static_cast<std::size_t>(rcs.period[i])]
            << ',' << rcs.outcome(static_cast<Index>(i)) << '\n';
}

}  // namespace spt
