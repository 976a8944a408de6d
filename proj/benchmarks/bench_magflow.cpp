#include <benchmark/benchmark.h>

#include "magflow/spectrum.hpp"

using namespace magflow;

namespace {

SurfaceModel perturbed() {
  return SurfaceModel(0.0, {{0.05, {0.3, 1.2}, 2.0}}, {{0.3, {-0.2, 0.9}, 2.0}});
}

const UnitVector kV{{0.1, 1.0}, 1.3};

void BM_Flow(benchmark::State& state) {
  const SurfaceModel m = perturbed();
  const double t = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(flow(m, kV, t, 1e-10));
}
BENCHMARK(BM_Flow)->Arg(1)->Arg(10)->Unit(benchmark::kMicrosecond);

void BM_StabilityData(benchmark::State& state) {
  const SurfaceModel m = perturbed();
  for (auto _ : state) benchmark::DoNotOptimize(stabilityData(m, kV, 1e-8));
}
BENCHMARK(BM_StabilityData)->Unit(benchmark::kMillisecond);

void BM_Busemann(benchmark::State& state) {
  const SurfaceModel m = perturbed();
  for (auto _ : state) benchmark::DoNotOptimize(busemann(m, kV, {0.4, 1.3}, 1e-8));
}
BENCHMARK(BM_Busemann)->Unit(benchmark::kMillisecond);

void BM_StableTransfer(benchmark::State& state) {
  const SurfaceModel m = perturbed();
  const UnitVector vp = asymptoticVector(m, {0.35, 1.2}, kV);
  for (auto _ : state) benchmark::DoNotOptimize(stableTransfer(m, kV, vp));
}
BENCHMARK(BM_StableTransfer)->Unit(benchmark::kMillisecond);

void BM_LinearizationBuild(benchmark::State& state) {
  const SurfaceModel m = perturbed();
  for (auto _ : state) {
    const Linearization lin(m, kV);
    benchmark::DoNotOptimize(lin.transferAt(0.5));
  }
}
BENCHMARK(BM_LinearizationBuild)->Unit(benchmark::kMillisecond);

void BM_LinearizationEval(benchmark::State& state) {
  const SurfaceModel m = perturbed();
  const Linearization lin(m, kV);
  for (auto _ : state) benchmark::DoNotOptimize(lin({0.2, 1.1}));
}
BENCHMARK(BM_LinearizationEval)->Unit(benchmark::kMillisecond);

void BM_PeriodicOrbit(benchmark::State& state) {
  const SurfaceModel m = SurfaceModel(0.6, {{0.01, {0.4, 1.1}, 1.0}}, {}).withPeriod(2.0);
  const CyclicQuotient q(m, 2.0);
  for (auto _ : state) {
    const PeriodicOrbit o = findPeriodicOrbit(q);
    benchmark::DoNotOptimize(periodicLyapunov(q, o));
  }
}
BENCHMARK(BM_PeriodicOrbit)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
