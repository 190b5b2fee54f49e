#pragma once

#include "spt/numeric.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace spt {

// Units are stored 0-based with the treated unit at index 0 (unit k=1 in the
// usual notation); controls occupy indices 1..K-1. Periods are 0-based with
// the last pre-period at index T0-1 and the post period at index T-1.
// Original labels are kept alongside for reporting.

struct PanelDataset {
    std::vector<std::string> ids;  // one per individual
    std::vector<int> unit;         // per individual, in [0, K)
    Matrix outcomes;               // individuals x T
    int K = 0;
    int T = 0;
    int T0 = 0;
    std::vector<std::string> unit_labels;
    std::vector<std::string> period_labels;

    [[nodiscard]] std::size_t size() const { return unit.size(); }
};

struct RcsDataset {
    Vector outcome;
    std::vector<int> unit;    // in [0, K)
    std::vector<int> period;  // in [0, T)
    int K = 0;
    int T = 0;
    int T0 = 0;
    std::vector<std::string> unit_labels;
    std::vector<std::string> period_labels;

    [[nodiscard]] std::size_t size() const { return unit.size(); }
};

using Dataset = std::variant<PanelDataset, RcsDataset>;

// Throws on any invariant violation (row shapes, label coverage, T0 < T,
// panel units non-empty, RCS cells with at least two observations).
void validate(const PanelDataset& data);
void validate(const RcsDataset& data);
void validate(const Dataset& data);

// Individuals (panel) or rows (RCS): the n used for root-n scaling.
std::int64_t sample_size(const Dataset& data);
int dataset_K(const Dataset& data);
int dataset_T(const Dataset& data);
int dataset_T0(const Dataset& data);

struct CsvSchema {
    std::string col_id = "id";
    std::string col_unit = "unit";
    std::string col_period = "period";
    std::string col_outcome = "outcome";
    std::string treated_unit;  // label of the treated unit; required
    std::string t0;            // label of the last pre-treatment period; required
};

// Long-format CSV with a header row. Unit labels are relabeled so the treated
// unit comes first and the remaining units follow in label order (numeric when
// every label parses as a number). Periods are ordered the same way.
PanelDataset load_panel_csv(const std::filesystem::path& path, const CsvSchema& schema);
PanelDataset load_panel_csv(std::istream& in, const CsvSchema& schema);
RcsDataset load_rcs_csv(const std::filesystem::path& path, const CsvSchema& schema);
RcsDataset load_rcs_csv(std::istream& in, const CsvSchema& schema);

// Long format readable by the loaders with the default column names
// (id,unit,period,outcome for panel; unit,period,outcome for RCS).
void write_long_csv(std::ostream& out, const Dataset& data);

enum class Design { Panel, Rcs, Population };

struct CellStats {
    Design design = Design::Panel;
    int K = 0;
    int T = 0;
    Matrix means;        // K x T
    CountMatrix counts;  // K x T
    // Panel: shares(k, t) = p_k for every t, so each column sums to one.
    // RCS: shares(k, t) = pi_kt, summing to one over all cells.
    // Population: uniform unit shares, laid out as for panel.
    Matrix shares;
    std::int64_t n_total = 0;

    // Share of unit k (p_k for panel, sum_t pi_kt for RCS).
    [[nodiscard]] double unit_share(int k) const;
};

CellStats cell_means(const PanelDataset& data);
CellStats cell_means(const RcsDataset& data);
CellStats cell_means(const Dataset& data);

// Noise-free cell means (n = 1, unit counts, uniform shares).
CellStats population_stats(const Matrix& means);

struct TrendSystem {
    Matrix A_pre;   // (T0-1) x (K-1)
    Vector b_pre;   // T0-1
    Vector a_post;  // K-1
    Matrix A;       // T0 x (K-1): A_pre stacked over a_post'
    Vector b;       // T0: b_pre stacked over treated_T_mean - treated_T0_mean
    std::int64_t n = 1;
    double treated_T_mean = 0.0;
    double treated_T0_mean = 0.0;

    [[nodiscard]] int controls() const { return static_cast<int>(A.cols()); }
    [[nodiscard]] int T0() const { return static_cast<int>(A.rows()); }
    // Observed change of the treated unit from the last pre-period to the post period.
    [[nodiscard]] double treated_change() const { return treated_T_mean - treated_T0_mean; }
};

// First differences of the cell means. Periods strictly between T0 and the
// last period are not used; the last period is the post period.
TrendSystem build_trend_system(const CellStats& stats, int T0, std::int64_t n);
TrendSystem build_trend_system(const Dataset& data);

struct MultiplierDraw {
    std::vector<double> weights;
};

// i.i.d. Exponential(1) multipliers, one per sampled individual (panel) or row (RCS).
MultiplierDraw draw_multipliers(std::size_t n, std::uint64_t seed);
MultiplierDraw unit_multipliers(std::size_t n);

CellStats multiplier_cell_means(const PanelDataset& data, const MultiplierDraw& draw);
CellStats multiplier_cell_means(const RcsDataset& data, const MultiplierDraw& draw);
CellStats multiplier_cell_means(const Dataset& data, const MultiplierDraw& draw);

}  // namespace spt
