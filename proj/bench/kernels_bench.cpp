#include "itr/data.hpp"
#include "itr/kernels.hpp"

#include <benchmark/benchmark.h>

#include <omp.h>

#include <map>

using namespace itr;

namespace {

const PopulationDraw& population(Index n) {
  static std::map<Index, PopulationDraw> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    SimulationConfig cfg;
    cfg.population_size = n;
    cfg.rwd_size = 100;
    cfg.alpha0 = -3.0;
    cfg.seed = 17;
    it = cache.emplace(n, simulate_population(cfg)).first;
  }
  return it->second;
}

const LinearRule& rule() {
  static const LinearRule r((VectorXd(3) << 0.2, 1.0, -0.8).finished());
  return r;
}

void set_counters(benchmark::State& state) {
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = omp_get_max_threads();
}

void BM_ValueMseSerial(benchmark::State& state) {
  const auto& p = population(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::value_mse_serial(rule(), p.covariates, p.potential_outcomes, p.contrast));
  }
  set_counters(state);
}

void BM_ValueMseOmp(benchmark::State& state) {
  const auto& p = population(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::value_mse_omp(rule(), p.covariates, p.potential_outcomes, p.contrast));
  }
  set_counters(state);
}

void BM_PopulationValueSerial(benchmark::State& state) {
  const auto& p = population(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::population_value_serial(rule(), p.covariates, p.potential_outcomes));
  }
  set_counters(state);
}

void BM_PopulationValueOmp(benchmark::State& state) {
  const auto& p = population(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::population_value_omp(rule(), p.covariates, p.potential_outcomes));
  }
  set_counters(state);
}

void BM_MisclassificationSerial(benchmark::State& state) {
  const auto& p = population(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::misclassification_serial(rule(), p.covariates, p.contrast));
  set_counters(state);
}

void BM_MisclassificationOmp(benchmark::State& state) {
  const auto& p = population(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::misclassification_omp(rule(), p.covariates, p.contrast));
  set_counters(state);
}

void BM_GridOracleSerial(benchmark::State& state) {
  const auto& p = population(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::grid_oracle_serial(p.covariates, p.contrast, {41, -1.0, 1.0}));
  set_counters(state);
}

void BM_GridOracleOmp(benchmark::State& state) {
  const auto& p = population(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::grid_oracle_omp(p.covariates, p.contrast, {41, -1.0, 1.0}));
  set_counters(state);
}

void BM_SweepOracleSerial(benchmark::State& state) {
  const auto& p = population(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::sweep_oracle_2d_serial(p.covariates, p.contrast, 180));
  set_counters(state);
}

void BM_SweepOracleOmp(benchmark::State& state) {
  const auto& p = population(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::sweep_oracle_2d_omp(p.covariates, p.contrast, 180));
  set_counters(state);
}

}  // namespace

BENCHMARK(BM_ValueMseSerial)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ValueMseOmp)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PopulationValueSerial)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PopulationValueOmp)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MisclassificationSerial)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MisclassificationOmp)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_GridOracleSerial)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridOracleOmp)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepOracleSerial)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepOracleOmp)->Arg(100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
