// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include "inchworm/bath.hpp"
#include "inchworm/inchworm.hpp"
#include "inchworm/ode_mc.hpp"
#include "inchworm/parallel.hpp"

namespace {

using namespace inchworm;

SchemeConfig scheme(int N) {
  SchemeConfig s;
  s.N = N;
  s.t = 1.0;
  s.ns = 8;
  s.mbar = 3;
  return s;
}

void BM_InchwormParallel(benchmark::State& state) {
  const BathCorrelation bath(build_bath(), 2.0 + 1e-9);
  const InchwormSolver solver(SystemSpec::spin_boson(), bath, scheme(static_cast<int>(state.range(0))));
  std::uint64_t r = 0;
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve(r++));
}

void BM_InchwormSerial(benchmark::State& state) {
  const BathCorrelation bath(build_bath(), 2.0 + 1e-9);
  const InchwormSolver solver(SystemSpec::spin_boson(), bath, scheme(static_cast<int>(state.range(0))));
  std::uint64_t r = 0;
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve_serial(r++));
}

void BM_ToyExperimentParallel(benchmark::State& state) {
  const ToyModel model{3.0, 3.0, 0.25, 10};
  for (auto _ : state)
    benchmark::DoNotOptimize(toy_model_experiment(model, static_cast<std::size_t>(state.range(0)), 1));
}

void BM_ToyExperimentSerial(benchmark::State& state) {
  const ToyModel model{3.0, 3.0, 0.25, 10};
  for (auto _ : state)
    benchmark::DoNotOptimize(
        toy_model_experiment_serial(model, static_cast<std::size_t>(state.range(0)), 1));
}

void BM_ToyReplicateFast(benchmark::State& state) {
  const ToyModel model{3.0, 3.0, 0.25, 10};
  Rng rng = derive_stream(1, {0});
  for (auto _ : state) benchmark::DoNotOptimize(model.replicate(rng));
}

void BM_ToyReplicateGeneric(benchmark::State& state) {
  const ToyModel model{3.0, 3.0, 0.25, 10};
  Rng rng = derive_stream(1, {0});
  for (auto _ : state) benchmark::DoNotOptimize(model.replicate_generic(rng));
}

}  // namespace

BENCHMARK(BM_InchwormParallel)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_InchwormSerial)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ToyExperimentParallel)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ToyExperimentSerial)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ToyReplicateFast);
BENCHMARK(BM_ToyReplicateGeneric);

BENCHMARK_MAIN();
