#include <cmath>

#include <benchmark/benchmark.h>

#include "avgerr/ar.hpp"
#include "avgerr/ks.hpp"
#include "avgerr/multiscale.hpp"
#include "avgerr/series.hpp"
#include "avgerr/transient.hpp"

namespace {

using namespace avgerr;

TimeSeries ar6_series(std::size_t n) { return simulate_ar_stationary(paper_ar6(), n, 1); }

void BM_MultiscaleProfile(benchmark::State& state) {
  const TimeSeries x = ar6_series(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(multiscale_profile(x));
  state.SetComplexityN(state.range(0));
}
// sqrt(N) scales, each a pass over the data.
BENCHMARK(BM_MultiscaleProfile)
    ->RangeMultiplier(4)
    ->Range(1 << 10, 1 << 20)
    ->Complexity([](benchmark::IterationCount n) { return std::pow(static_cast<double>(n), 1.5); });

void BM_DetectTransient(benchmark::State& state) {
  const TimeSeries x = ar6_series(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(detect_transient(x));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DetectTransient)->RangeMultiplier(4)->Range(1 << 10, 1 << 20)->Complexity(benchmark::oN);

void BM_ObjectiveAndGradient(benchmark::State& state) {
  const MultiscaleProfile prof = multiscale_profile(ar6_series(static_cast<std::size_t>(state.range(0))));
  const AcfModelParams p{{0.3, 0.3, 0.4}, {0.2, 0.6, 0.95}, 1.0, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(objective_and_gradient(p, prof));
}
BENCHMARK(BM_ObjectiveAndGradient)->RangeMultiplier(16)->Range(1 << 10, 1 << 18);

void BM_Estimate(benchmark::State& state) {
  const TimeSeries x = ar6_series(static_cast<std::size_t>(state.range(0)));
  const FitConfig c;
  for (auto _ : state) benchmark::DoNotOptimize(estimate(x, c));
}
BENCHMARK(BM_Estimate)->Arg(1 << 11)->Arg(1 << 14)->Unit(benchmark::kMillisecond);

void BM_KsStep(benchmark::State& state) {
  KsConfig cfg;
  cfg.n_modes = static_cast<std::size_t>(state.range(0));
  const KsIntegrator ks(cfg);
  KsState s = ks.initial_state();
  for (auto _ : state) ks.step(s);
}
BENCHMARK(BM_KsStep)->Arg(128)->Arg(512)->Arg(2048);

void BM_YuleWalkerTruth(benchmark::State& state) {
  const ArModel m = paper_ar6();
  for (auto _ : state) benchmark::DoNotOptimize(yule_walker_truth(m, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_YuleWalkerTruth)->Arg(1 << 10)->Arg(1 << 14);

}  // namespace

BENCHMARK_MAIN();
