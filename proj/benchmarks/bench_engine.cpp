#include <benchmark/benchmark.h>

#include "abon/adaptive.hpp"
#include "abon/experiment.hpp"
#include "abon/pruner.hpp"
#include "abon/scoring.hpp"
#include "abon/sim_backend.hpp"
#include "abon/workload.hpp"

namespace {

abon::Workload bench_workload(std::size_t n) {
  abon::WorkloadConfig config;
  config.n_prompts = n;
  config.seed = 7;
  return abon::generate_workload(config);
}

void BM_StartGeneration(benchmark::State& state) {
  const auto workload = bench_workload(1);
  abon::SimBackend backend(workload.worlds);
  abon::GenerationRequest req{0, "", 1.0, 1 << 20, 1};
  int index = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(backend.start_generation(req, index++ & 1023));
  }
}
BENCHMARK(BM_StartGeneration);

void BM_SelfEvaluate(benchmark::State& state) {
  const auto workload = bench_workload(1);
  abon::SimBackend backend(workload.worlds);
  abon::GenerationRequest req{0, "", 1.0, 1 << 20, 1};
  const abon::Sample sample = backend.start_generation(req, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(backend.self_evaluate(sample));
  }
}
BENCHMARK(BM_SelfEvaluate);

void BM_RankScores(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<abon::scoring::EvalScore> scores;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = static_cast<double>((i * 2654435761u) % 1000) / 1000.0;
    scores.push_back(abon::scoring::make_score(
        {0, static_cast<int>(i)}, 100, {0.9 * p, 0.9 * (1.0 - p)}));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(abon::scoring::rank(scores));
  }
}
BENCHMARK(BM_RankScores)->Arg(16)->Arg(256);

void BM_RunAdaptive(benchmark::State& state) {
  const auto workload = bench_workload(64);
  abon::SimBackend backend(workload.worlds);
  const double tau = static_cast<double>(state.range(0)) / 100.0;
  std::uint64_t prompt = 0;
  for (auto _ : state) {
    abon::PromptSpec spec;
    spec.prompt_id = prompt++ & 63;
    spec.seed = 7;
    benchmark::DoNotOptimize(
        abon::adaptive::run_adaptive(spec, backend, {tau, 16, true}));
  }
}
BENCHMARK(BM_RunAdaptive)->Arg(92)->Arg(100);

void BM_RunPruned(benchmark::State& state) {
  const auto workload = bench_workload(64);
  abon::SimBackend backend(workload.worlds);
  std::uint64_t prompt = 0;
  for (auto _ : state) {
    abon::PromptSpec spec;
    spec.prompt_id = prompt++ & 63;
    spec.seed = 7;
    benchmark::DoNotOptimize(
        abon::prune::run_pruned(spec, backend, {16, 128, 0.75}));
  }
}
BENCHMARK(BM_RunPruned);

}  // namespace

BENCHMARK_MAIN();
