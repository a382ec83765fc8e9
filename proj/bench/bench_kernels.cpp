// Serial reference vs OpenMP kernels: the permutation chi-square test and
// batches of seeded random playthroughs. Both pairs return identical results;
// this only compares their speed.
#include <benchmark/benchmark.h>

#include "rehearsal/analytics/permutation.hpp"
#include "rehearsal/playthrough.hpp"
#include "rehearsal/scenario.hpp"

namespace {

using namespace rehearsal;

const analytics::Table2x2 kTable{{{22, 3}, {15, 10}}};

void BM_PermutationSerial(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(analytics::permutation_chi_square_serial(kTable, state.range(0), 7));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PermutationParallel(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(analytics::permutation_chi_square_parallel(kTable, state.range(0), 7));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

ScenarioPtr fast_scenario() {
  static const auto scenario = [] {
    auto s = scale_scenario(canonical_default_scenario(), 10);
    s.id = "ct_fast";
    return std::make_shared<const Scenario>(std::move(s));
  }();
  return scenario;
}

void BM_PlaythroughBatchSerial(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(playthrough::batch_random_runs_serial(fast_scenario(), 1, state.range(0), 400));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PlaythroughBatchParallel(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(playthrough::batch_random_runs_parallel(fast_scenario(), 1, state.range(0), 400));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_PermutationSerial)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PermutationParallel)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PlaythroughBatchSerial)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PlaythroughBatchParallel)->Arg(100)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
