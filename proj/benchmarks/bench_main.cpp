#include "spt/identify.hpp"
#include "spt/infer.hpp"
#include "spt/optim.hpp"
#include "spt/sim.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace spt;

namespace {

Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = z(rng);
    return m;
}

void BM_SimplexQp(benchmark::State& state) {
    const auto d = static_cast<Index>(state.range(0));
    std::mt19937_64 rng(1);
    QpProblem p;
    p.M = gaussian(d + 2, d, rng);
    p.v = gaussian(d + 2, 1, rng).col(0);
    for (auto _ : state) benchmark::DoNotOptimize(solve_simplex_qp(p).objective);
}
BENCHMARK(BM_SimplexQp)->Arg(7)->Arg(29)->Arg(99);

void BM_ConvexTrendBounds(benchmark::State& state) {
    DgpSpec spec;
    spec.K = static_cast<int>(state.range(0));
    const TrendSystem ts = build_trend_system(population_stats(population_design(spec).means), spec.T0, 1);
    for (auto _ : state) benchmark::DoNotOptimize(convex_trend_bounds(ts).lo);
}
BENCHMARK(BM_ConvexTrendBounds)->Arg(8)->Arg(30);

void BM_TestCandidates(benchmark::State& state) {
    DgpSpec spec;
    spec.cell_n = 100;
    const Dataset data = generate_dataset(spec, 7);
    const TrendSystem ts = build_trend_system(data);
    InferenceConfig cfg;
    cfg.B = 200;
    cfg.threads = 1;
    const BootstrapEnsemble ens(data, ts, cfg);
    std::vector<double> taus;
    for (int i = 0; i < state.range(0); ++i) taus.push_back(-2.0 + 4.0 * i / static_cast<double>(state.range(0) - 1));
    for (auto _ : state) benchmark::DoNotOptimize(test_candidates(ens, taus, cfg).size());
}
BENCHMARK(BM_TestCandidates)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
