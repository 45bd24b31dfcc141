#include <benchmark/benchmark.h>

#include "qpareto/experiments.hpp"
#include "qpareto/quantum.hpp"

using namespace qpareto;

static void BM_Propagate(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  int steps = static_cast<int>(state.range(1));
  QuantumSystem sys = ladder_system(n);
  ControlField field = random_transition_field(sys, {100.0, steps}, 1);
  for (auto _ : state) {
    PropagatorPath path = propagate(sys, field);
    benchmark::DoNotOptimize(path.final_unitary());
  }
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_Propagate)
    ->Args({5, 512})
    ->Args({11, 512})
    ->Args({11, 1024})
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
