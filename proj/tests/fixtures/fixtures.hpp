#pragma once

#include "spt/data.hpp"
#include "spt/sim.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace spt::fixture {

// Trend system assembled from its blocks; Delta is the treated post trend.
inline TrendSystem system(const Matrix& A_pre, const Vector& b_pre, const Vector& a_post, double delta, std::int64_t n = 1) {
    TrendSystem ts;
    ts.A_pre = A_pre;
    ts.b_pre = b_pre;
    ts.a_post = a_post;
    ts.A.resize(A_pre.rows() + 1, A_pre.cols());
    ts.A << A_pre, a_post.transpose();
    ts.b.resize(b_pre.size() + 1);
    ts.b << b_pre, delta;
    ts.n = n;
    ts.treated_T_mean = delta;
    ts.treated_T0_mean = 0.0;
    return ts;
}

// One pre-trend equation w.(1,2,3) = 2 with post trends (0,1,4) and Delta = 2:
// convex trend set [1, 2], effect set [0, 1].
inline TrendSystem segment() {
    Matrix A_pre(1, 3);
    A_pre << 1, 2, 3;
    Vector b_pre(1);
    b_pre << 2;
    Vector a_post(3);
    a_post << 0, 1, 4;
    return system(A_pre, b_pre, a_post, 2.0);
}

// Pre-trend 5 outside the hull of control trends {1, 2}.
inline TrendSystem hull_violation() {
    Matrix A_pre(1, 2);
    A_pre << 1, 2;
    Vector b_pre(1);
    b_pre << 5;
    Vector a_post(2);
    a_post << 0, 1;
    return system(A_pre, b_pre, a_post, 0.0);
}

inline TrendSystem twfe(const Vector& lambda, const Vector& gamma, int T0) {
    return build_trend_system(twfe_population_stats(lambda, gamma), T0, 1);
}

// RCS data without sampling noise: every cell holds `per_cell` copies of its
// mean, so bootstrap analogs equal the estimates for any multipliers.
inline RcsDataset exact_rcs(const Matrix& means, int T0, int per_cell) {
    RcsDataset d;
    d.K = static_cast<int>(means.rows());
    d.T = static_cast<int>(means.cols());
    d.T0 = T0;
    std::vector<double> y;
    for (int k = 0; k < d.K; ++k)
        for (int t = 0; t < d.T; ++t)
            for (int i = 0; i < per_cell; ++i) {
                d.unit.push_back(k);
                d.period.push_back(t);
                y.push_back(means(k, t));
            }
    d.outcome = Eigen::Map<Vector>(y.data(), static_cast<Index>(y.size()));
    for (int k = 0; k < d.K; ++k) d.unit_labels.push_back(std::to_string(k + 1));
    for (int t = 0; t < d.T; ++t) d.period_labels.push_back(std::to_string(t + 1));
    return d;
}

// Scratch file removed on destruction. The name gets a random suffix so
// test binaries running side by side do not collide.
class TempFile {
public:
    explicit TempFile(const std::string& name)
        : path_(std::filesystem::temp_directory_path() / ("spt_test_" + std::to_string(std::random_device{}()) + "_" + name)) {}
    TempFile(const TempFile&) = delete;
    TempFile& operator=(const TempFile&) = delete;
    ~TempFile() {
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::string str() const { return path_.string(); }

    void write(const std::string& text) const {
        std::ofstream out(path_, std::ios::binary);
        out << text;
    }

    void write(const Dataset& data) const {
        std::ofstream out(path_, std::ios::binary);
        write_long_csv(out, data);
    }

private:
    std::filesystem::path path_;
};

}  // namespace spt::fixture
