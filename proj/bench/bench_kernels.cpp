// OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>

#include "cpbh/adversarial.hpp"
#include "cpbh/constructions.hpp"
#include "cpbh/reference.hpp"
#include "cpbh/sim_harness.hpp"
#include "support.hpp"

using namespace cpbh;

namespace {

ExperimentConfig fdr_config(const PSource& s, std::size_t reps) {
  ExperimentConfig cfg;
  cfg.scenario = &s;
  cfg.alpha = 0.1;
  cfg.reps = reps;
  cfg.seed = 1;
  return cfg;
}

void BM_EstimateFdr(benchmark::State& state) {
  const AtomScenario s = random_atom_scenario(static_cast<std::size_t>(state.range(0)), 3);
  const ExperimentConfig cfg = fdr_config(s, 20000);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_fdr(cfg).mean);
  state.SetItemsProcessed(state.iterations() * 20000);
}

void BM_EstimateFdrSerial(benchmark::State& state) {
  const AtomScenario s = random_atom_scenario(static_cast<std::size_t>(state.range(0)), 3);
  const ExperimentConfig cfg = fdr_config(s, 20000);
  for (auto _ : state) benchmark::DoNotOptimize(reference::estimate_fdr(cfg).mean);
  state.SetItemsProcessed(state.iterations() * 20000);
}

std::vector<TrialData> bench_trials(std::size_t m) {
  Rng rng(5);
  return support::null_trials(rng, m, 8, 4);
}

void BM_PermutationPooling(benchmark::State& state) {
  const auto trials = bench_trials(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(permutation_pooling(trials, support::mean_difference, {}).compound);
  }
}

void BM_PermutationPoolingSerial(benchmark::State& state) {
  const auto trials = bench_trials(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::permutation_pooling(trials, support::mean_difference, {}).compound);
  }
}

std::vector<GaussianSummary> bench_summaries(std::size_t m) {
  Rng rng(6);
  std::vector<GaussianSummary> s(m);
  for (auto& g : s) g = {support::normal(rng), 0.5 + rng.uniform(), 6};
  return s;
}

void BM_GaussianMeans(benchmark::State& state) {
  const auto s = bench_summaries(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_means_pvalues(s));
}

void BM_GaussianMeansSerial(benchmark::State& state) {
  const auto s = bench_summaries(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::gaussian_means_pvalues(s));
}

void BM_BhReject(benchmark::State& state) {
  Rng rng(7);
  const PValueVector p = support::fuzz_vector(rng, static_cast<std::size_t>(state.range(0)), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(bh_reject(p, 0.1).k_hat);
}

void BM_BhRejectSerial(benchmark::State& state) {
  Rng rng(7);
  const PValueVector p = support::fuzz_vector(rng, static_cast<std::size_t>(state.range(0)), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(reference::bh_reject(p, 0.1).k_hat);
}

}  // namespace

BENCHMARK(BM_EstimateFdr)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimateFdrSerial)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PermutationPooling)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PermutationPoolingSerial)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GaussianMeans)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GaussianMeansSerial)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BhReject)->Arg(1000)->Arg(100000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BhRejectSerial)->Arg(1000)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
