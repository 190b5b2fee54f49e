#include "spt/data.hpp"

#include "spt/error.hpp"

#include <random>

namespace spt {

namespace {

void check_shape(int K, int T, int T0) {
    if (K < 1 || T < 2) throw Error(ErrorCode::DegenerateShape, "need K >= 1 and T >= 2");
    if (T0 < 1 || T0 >= T) throw Error(ErrorCode::DegenerateShape, "need 1 <= T0 < T");
}

// Shared by cell_means and multiplier_cell_means so that unit multipliers
// reproduce the unweighted means bit for bit.
CellStats weighted_panel_means(const PanelDataset& data, std::span<const double> w) {
    const auto n = data.size();
    CellStats s;
    s.design = Design::Panel;
    s.K = data.K;
    s.T = data.T;
    s.means.resize(data.K, data.T);
    s.counts = CountMatrix::Zero(data.K, data.T);
    s.shares.resize(data.K, data.T);
    s.n_total = static_cast<std::int64_t>(n);

    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(data.K));
    for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(data.unit[i])].push_back(i);

    std::vector<double> buffer;
    std::vector<double> unit_weight(static_cast<std::size_t>(data.K));
    for (int k = 0; k < data.K; ++k) {
        const auto& rows = members[static_cast<std::size_t>(k)];
        if (rows.empty()) throw Error::cell(ErrorCode::EmptyCell, k + 1, 1);
        buffer.resize(rows.size());
        for (std::size_t j = 0; j < rows.size(); ++j) buffer[j] = w[rows[j]];
        const double wsum = pairwise_sum(buffer);
        if (!(wsum > 0.0)) throw Error::cell(ErrorCode::BootstrapDegenerate, k + 1, 1);
        unit_weight[static_cast<std::size_t>(k)] = wsum;
        for (int t = 0; t < data.T; ++t) {
            for (std::size_t j = 0; j < rows.size(); ++j) buffer[j] = w[rows[j]] * data.outcomes(static_cast<Index>(rows[j]), t);
            s.means(k, t) = pairwise_sum(buffer) / wsum;
            s.counts(k, t) = static_cast<std::int64_t>(rows.size());
        }
    }
    const double total = pairwise_sum(unit_weight);
    for (int k = 0; k < data.K; ++k) s.shares.row(k).setConstant(unit_weight[static_cast<std::size_t>(k)] / total);
    return s;
}

CellStats weighted_rcs_means(const RcsDataset& data, std::span<const double> w) {
    const auto n = data.size();
    const auto cells = static_cast<std::size_t>(data.K) * static_cast<std::size_t>(data.T);
    CellStats s;
    s.design = Design::Rcs;
    s.K = data.K;
    s.T = data.T;
    s.means.resize(data.K, data.T);
    s.counts = CountMatrix::Zero(data.K, data.T);
    s.shares.resize(data.K, data.T);
    s.n_total = static_cast<std::int64_t>(n);

    // Counting sort of rows by cell, stable in input order.
    std::vector<std::size_t> start(cells + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++start[static_cast<std::size_t>(data.unit[i]) * static_cast<std::size_t>(data.T) + static_cast<std::size_t>(data.period[i]) + 1];
    }
    for (std::size_t c = 0; c < cells; ++c) start[c + 1] += start[c];
    std::vector<std::size_t> order(n);
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(data.unit[i]) * static_cast<std::size_t>(data.T) + static_cast<std::size_t>(data.period[i]);
        order[fill[c]++] = i;
    }

    std::vector<double> values;
    std::vector<double> weights;
    std::vector<double> cell_weight(cells);
    for (int k = 0; k < data.K; ++k) {
        for (int t = 0; t < data.T; ++t) {
            const auto c = static_cast<std::size_t>(k) * static_cast<std::size_t>(data.T) + static_cast<std::size_t>(t);
            const std::size_t begin = start[c];
            const std::size_t end = start[c + 1];
            if (begin == end) throw Error::cell(ErrorCode::EmptyCell, k + 1, t + 1);
            values.resize(end - begin);
            weights.resize(end - begin);
            for (std::size_t j = begin; j < end; ++j) {
                const std::size_t row = order[j];
                weights[j - begin] = w[row];
                values[j - begin] = w[row] * data.outcome(static_cast<Index>(row));
            }
            const double wsum = pairwise_sum(weights);
            if (!(wsum > 0.0)) throw Error::cell(ErrorCode::BootstrapDegenerate, k + 1, t + 1);
            s.means(k, t) = pairwise_sum(values) / wsum;
            s.counts(k, t) = static_cast<std::int64_t>(end - begin);
            cell_weight[c] = wsum;
        }
    }
    const double total = pairwise_sum(cell_weight);
    for (int k = 0; k < data.K; ++k)
        for (int t = 0; t < data.T; ++t)
            s.shares(k, t) = cell_weight[static_cast<std::size_t>(k) * static_cast<std::size_t>(data.T) + static_cast<std::size_t>(t)] / total;
    return s;
}

}  // namespace

void validate(const PanelDataset& data) {
    check_shape(data.K, data.T, data.T0);
    const auto n = data.size();
    if (data.outcomes.rows() != static_cast<Index>(n) || data.outcomes.cols() != data.T)
        throw Error(ErrorCode::DimensionMismatch, "panel outcomes must be individuals x T");
    if (!data.ids.empty() && data.ids.size() != n)
        throw Error(ErrorCode::LengthMismatch, "one id per individual");
    std::vector<std::size_t> per_unit(static_cast<std::size_t>(data.K), 0);
    for (int u : data.unit) {
        if (u < 0 || u >= data.K) throw Error(ErrorCode::InvalidArgument, "unit index out of range");
        ++per_unit[static_cast<std::size_t>(u)];
    }
    for (int k = 0; k < data.K; ++k)
        if (per_unit[static_cast<std::size_t>(k)] == 0) throw Error::cell(ErrorCode::EmptyCell, k + 1, 1);
    if (!data.outcomes.allFinite()) throw Error(ErrorCode::NonFiniteInput, "panel outcomes");
}

void validate(const RcsDataset& data) {
    check_shape(data.K, data.T, data.T0);
    const auto n = data.size();
    if (data.outcome.size() != static_cast<Index>(n) || data.period.size() != n)
        throw Error(ErrorCode::LengthMismatch, "RCS columns differ in length");
    CountMatrix counts = CountMatrix::Zero(data.K, data.T);
    for (std::size_t i = 0; i < n; ++i) {
        if (data.unit[i] < 0 || data.unit[i] >= data.K || data.period[i] < 0 || data.period[i] >= data.T)
            throw Error(ErrorCode::InvalidArgument, "unit or period index out of range");
        ++counts(data.unit[i], data.period[i]);
    }
    for (int k = 0; k < data.K; ++k) {
        for (int t = 0; t < data.T; ++t) {
            if (counts(k, t) == 0) throw Error::cell(ErrorCode::EmptyCell, k + 1, t + 1);
            if (counts(k, t) == 1) throw Error::cell(ErrorCode::SingletonCell, k + 1, t + 1);
        }
    }
    if (!data.outcome.allFinite()) throw Error(ErrorCode::NonFiniteInput, "RCS outcomes");
}

void validate(const Dataset& data) {
    std::visit([](const auto& d) { validate(d); }, data);
}

std::int64_t sample_size(const Dataset& data) {
    return std::visit([](const auto& d) { return static_cast<std::int64_t>(d.size()); }, data);
}
int dataset_K(const Dataset& data) {
    return std::visit([](const auto& d) { return d.K; }, data);
}
int dataset_T(const Dataset& data) {
    return std::visit([](const auto& d) { return d.T; }, data);
}
int dataset_T0(const Dataset& data) {
    return std::visit([](const auto& d) { return d.T0; }, data);
}

double CellStats::unit_share(int k) const {
    if (design == Design::Rcs) return shares.row(k).sum();
    return shares(k, 0);
}

CellStats cell_means(const PanelDataset& data) {
    const std::vector<double> ones(data.size(), 1.0);
    return weighted_panel_means(data, ones);
}

CellStats cell_means(const RcsDataset& data) {
    const std::vector<double> ones(data.size(), 1.0);
    return weighted_rcs_means(data, ones);
}

CellStats cell_means(const Dataset& data) {
    return std::visit([](const auto& d) { return cell_means(d); }, data);
}

CellStats population_stats(const Matrix& means) {
    CellStats s;
    s.design = Design::Population;
    s.K = static_cast<int>(means.rows());
    s.T = static_cast<int>(means.cols());
    s.means = means;
    s.counts = CountMatrix::Ones(s.K, s.T);
    s.shares = Matrix::Constant(s.K, s.T, 1.0 / s.K);
    s.n_total = 1;
    return s;
}

TrendSystem build_trend_system(const CellStats& stats, int T0, std::int64_t n) {
    if (stats.K < 2) throw Error(ErrorCode::DegenerateShape, "need at least one control unit (K >= 2)");
    if (T0 < 2) throw Error(ErrorCode::DegenerateShape, "need T0 >= 2 for a pre-trend");
    if (T0 >= stats.T) throw Error(ErrorCode::DegenerateShape, "need T0 < T");
    if (stats.means.rows() != stats.K || stats.means.cols() != stats.T)
        throw Error(ErrorCode::DimensionMismatch, "cell means must be K x T");

    const int controls = stats.K - 1;
    const int post = stats.T - 1;
    const int last_pre = T0 - 1;
    TrendSystem ts;
    ts.n = n;
    ts.A_pre.resize(T0 - 1, controls);
    ts.b_pre.resize(T0 - 1);
    ts.a_post.resize(controls);
    for (int t = 1; t < T0; ++t) {
        ts.b_pre(t - 1) = stats.means(0, t) - stats.means(0, t - 1);
        for (int k = 1; k < stats.K; ++k) ts.A_pre(t - 1, k - 1) = stats.means(k, t) - stats.means(k, t - 1);
    }
    for (int k = 1; k < stats.K; ++k) ts.a_post(k - 1) = stats.means(k, post) - stats.means(k, last_pre);
    ts.treated_T_mean = stats.means(0, post);
    ts.treated_T0_mean = stats.means(0, last_pre);

    ts.A.resize(T0, controls);
    ts.A.topRows(T0 - 1) = ts.A_pre;
    ts.A.row(T0 - 1) = ts.a_post.transpose();
    ts.b.resize(T0);
    ts.b.head(T0 - 1) = ts.b_pre;
    ts.b(T0 - 1) = ts.treated_T_mean - ts.treated_T0_mean;
    return ts;
}

TrendSystem build_trend_system(const Dataset& data) {
    return build_trend_system(cell_means(data), dataset_T0(data), sample_size(data));
}

MultiplierDraw draw_multipliers(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> exp1(1.0);
    MultiplierDraw d;
    d.weights.resize(n);
    for (auto& w : d.weights) {
        do {
            w = exp1(rng);
        } while (!(w > 0.0));
    }
    return d;
}

MultiplierDraw unit_multipliers(std::size_t n) {
    return MultiplierDraw{std::vector<double>(n, 1.0)};
}

CellStats multiplier_cell_means(const PanelDataset& data, const MultiplierDraw& draw) {
    if (draw.weights.size() != data.size())
        throw Error(ErrorCode::LengthMismatch, "one multiplier per individual required");
    return weighted_panel_means(data, draw.weights);
}

CellStats multiplier_cell_means(const RcsDataset& data, const MultiplierDraw& draw) {
    if (draw.weights.size() != data.size())
        throw Error(ErrorCode::LengthMismatch, "one multiplier per row required");
    return weighted_rcs_means(data, draw.weights);
}

CellStats multiplier_cell_means(const Dataset& data, const MultiplierDraw& draw) {
    return std::visit([&](const auto& d) { return multiplier_cell_means(d, draw); }, data);
}

}  // namespace spt
