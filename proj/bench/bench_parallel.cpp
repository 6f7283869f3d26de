#include <benchmark/benchmark.h>

#include "activeeval/environment.hpp"
#include "activeeval/harness.hpp"
#include "activeeval/model_based.hpp"

using namespace activeeval;

namespace {

struct Fixture {
  LatentCorpus corpus{LatentCorpusSpec{10, 500, 1.3, 0.4054651081081644, 3}};
  MetricScoreTable table = simulate_metric(corpus, {0.5, 0.5, 20, 4});
  PairwiseModel model = calibrate("bench", ProbabilityModel::kLinear, scored_pairs(corpus, table)).model;
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_EliminateSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(ucb_eliminate_serial(f.table, f.model, {}));
}

void BM_EliminateParallel(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(ucb_eliminate(f.table, f.model, {}));
}

RunConfig seed_config() {
  RunConfig cfg;
  cfg.algorithm = AlgorithmSpec::named("rmed");
  cfg.max_budget = 3000;
  return cfg;
}

std::shared_ptr<const Environment> btl_env() {
  return std::make_shared<SyntheticEnvironment>(SyntheticSpec::btl(geometric_utilities(10, 1.3), 0.2));
}

void BM_SeedsSerial(benchmark::State& state) {
  const auto env = btl_env();
  const auto cfg = seed_config();
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_seeds_serial(env, cfg, nullptr, 1, static_cast<int>(state.range(0))));
  }
}

void BM_SeedsParallel(benchmark::State& state) {
  const auto env = btl_env();
  const auto cfg = seed_config();
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_seeds(env, cfg, nullptr, 1, static_cast<int>(state.range(0))));
  }
}

}  // namespace

BENCHMARK(BM_EliminateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EliminateParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SeedsSerial)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SeedsParallel)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
