#include <benchmark/benchmark.h>

#include "bubblesim/beliefs.hpp"
#include "bubblesim/equilibrium.hpp"
#include "bubblesim/market.hpp"
#include "bubblesim/paths.hpp"
#include "bubblesim/rng.hpp"
#include "bubblesim/scenario.hpp"

using namespace bubblesim;

static void BM_SampleBrownian(benchmark::State& state) {
  const TimeGrid g = make_time_grid(1.0, static_cast<int>(state.range(0)));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_brownian(g, 1, seed++));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleBrownian)->Arg(500)->Arg(2000)->Arg(8000);

static void BM_EquilibriumBundle(benchmark::State& state) {
  const TimeGrid g = make_time_grid(1.0, static_cast<int>(state.range(0)));
  const std::vector<double> weights = {1.0, 1.0};
  std::uint64_t seed = 1;
  for (auto _ : state) {
    const BrownianPath x = sample_brownian(g, 1, seed++);
    const DividendPath d = gbm_dividend(g, x, 2.0, 0.0, {0.2});
    const std::vector<DensityPath> densities = {density_optimist(d), reference_density(g, 1)};
    benchmark::DoNotOptimize(build_log_bundle(d, densities, weights, 0.05));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EquilibriumBundle)->Arg(2000);

static void BM_OptimistScenario(benchmark::State& state) {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::optimist;
  cfg.d0 = 2.0;
  cfg.vol = {0.2};
  cfg.n_steps = 500;
  cfg.n_paths = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_scenario(cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_OptimistScenario)->Arg(1000)->Unit(benchmark::kMillisecond);
