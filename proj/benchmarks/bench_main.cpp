#include <benchmark/benchmark.h>

#include <algorithm>

#include "distdyn/dynamics.hpp"
#include "distdyn/kde.hpp"
#include "distdyn/synthesis.hpp"

using namespace distdyn;

namespace {

TransitionPairs sample_pairs(int units) {
  ProcessSpec spec;
  spec.units = units;
  spec.seed = 42;
  return build_transition_pairs(to_relative(simulate(spec), RelativeScope::Pooled), 1);
}

Grid grid_for(const TransitionPairs& pairs, std::size_t count) {
  double top = 0.0;
  for (const auto& p : pairs.pairs) top = std::max({top, p.x, p.y});
  return default_grid(top, count);
}

// args: units, grid points, threads
void BM_Density2d(benchmark::State& state) {
  const auto pairs = sample_pairs(static_cast<int>(state.range(0)));
  const auto grid = grid_for(pairs, static_cast<std::size_t>(state.range(1)));
  const auto bw = silverman_bandwidths(pairs);
  const auto threads = static_cast<unsigned>(state.range(2));
  for (auto _ : state) benchmark::DoNotOptimize(raw_density_2d(pairs, bw, grid, grid, threads));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pairs.size()));
}
BENCHMARK(BM_Density2d)->Args({100, 128, 1})->Args({400, 256, 1})->Args({400, 256, 4})->Unit(benchmark::kMillisecond);

void BM_Evolve(benchmark::State& state) {
  const auto pairs = sample_pairs(400);
  const auto est = estimate_kernel(pairs, grid_for(pairs, static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(evolve(est.kernel, est.marginal));
}
BENCHMARK(BM_Evolve)->Arg(128)->Arg(256)->Arg(512);

void BM_Ergodic(benchmark::State& state) {
  const auto pairs = sample_pairs(400);
  const auto est = estimate_kernel(pairs, grid_for(pairs, static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(ergodic_distribution(est.kernel, est.marginal));
}
BENCHMARK(BM_Ergodic)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_EstimateKernel(benchmark::State& state) {
  const auto pairs = sample_pairs(400);
  const auto grid = grid_for(pairs, 256);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_kernel(pairs, grid));
}
BENCHMARK(BM_EstimateKernel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
