#include <benchmark/benchmark.h>

#include "qpareto/experiments.hpp"
#include "qpareto/measurement.hpp"
#include "qpareto/motc.hpp"

using namespace qpareto;

static void BM_GramianBuildSolve(benchmark::State& state) {
  int n = 11;
  int m = static_cast<int>(state.range(0));
  QuantumSystem sys = ladder_system(n);
  DensityMatrix rho0 = thermal_state(sys, 4.0);
  std::vector<Observable> pool = mub_observables(build_mub(n));
  std::vector<Observable> obs(pool.begin(), pool.begin() + m);
  ControlField field = random_transition_field(sys, {100.0, 512}, 1);
  PropagatorPath path = propagate(sys, field);
  GradientVector grad = functional_gradient(sys, field, rho0, obs, path);
  Eigen::VectorXd rhs = Eigen::VectorXd::Ones(m);
  for (auto _ : state) {
    Gramian g = build_gramian(grad);
    benchmark::DoNotOptimize(g.solve(rhs));
  }
}
BENCHMARK(BM_GramianBuildSolve)->Arg(3)->Arg(20)->Arg(40)->Unit(benchmark::kMicrosecond);
