#include <benchmark/benchmark.h>

#include "qpareto/experiments.hpp"
#include "qpareto/gradient.hpp"
#include "qpareto/measurement.hpp"

using namespace qpareto;

static void BM_FunctionalGradient(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  int m = static_cast<int>(state.range(1));
  QuantumSystem sys = ladder_system(n);
  DensityMatrix rho0 = thermal_state(sys, 4.0);
  std::vector<Observable> pool = mub_observables(build_mub(n));
  std::vector<Observable> obs(pool.begin(), pool.begin() + m);
  ControlField field = random_transition_field(sys, {100.0, 512}, 1);
  PropagatorPath path = propagate(sys, field);
  for (auto _ : state) {
    GradientVector g = functional_gradient(sys, field, rho0, obs, path);
    benchmark::DoNotOptimize(g.samples);
  }
}
BENCHMARK(BM_FunctionalGradient)
    ->Args({5, 3})
    ->Args({11, 3})
    ->Args({11, 20})
    ->Args({11, 40})
    ->Unit(benchmark::kMillisecond);
