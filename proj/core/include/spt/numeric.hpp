#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace spt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// Pairwise (tree) summation. Blocks of at most 8 terms are summed left to
// right, so the result depends only on the order of `values`.
double pairwise_sum(std::span<const double> values);

// Type-7 (linear interpolation between order statistics) sample quantile.
// `p` must lie in [0, 1]; `values` must be non-empty.
double quantile_type7(std::vector<double> values, double p);

// SplitMix64 finalizer; used to turn (seed, index) pairs into well-separated
// generator seeds.
std::uint64_t splitmix64(std::uint64_t x);

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ index);
}

bool all_finite(const Eigen::Ref<const Matrix>& m);

}  // namespace spt
