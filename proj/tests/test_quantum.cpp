#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qpareto/experiments.hpp"
#include "qpareto/quantum.hpp"

using namespace qpareto;

namespace {

ControlField zero_field(TimeGrid grid) {
  return ControlField::from_samples(grid, Eigen::VectorXd::Zero(grid.steps));
}

}  // namespace

TEST_CASE("free evolution of a diagonal Hamiltonian is a phase diagonal") {
  const int n = 4;
  cxmat h0 = cxmat::Zero(n, n);
  Eigen::VectorXd e(n);
  e << 0.1, 0.4, 0.9, 1.3;
  for (int i = 0; i < n; ++i) h0(i, i) = e[i];
  QuantumSystem sys(h0, cxmat::Identity(n, n));
  TimeGrid grid{10.0, 64};
  PropagatorPath path = propagate(sys, zero_field(grid));
  for (int i = 0; i < n; ++i)
    CHECK(std::abs(path.final_unitary()(i, i) -
                   std::polar(1.0, -e[i] * grid.t_final)) < 1e-10);
  CHECK(max_abs(path.final_unitary() -
                cxmat(path.final_unitary().diagonal().asDiagonal())) < 1e-12);
}

TEST_CASE("propagation is unitary at every grid point") {
  QuantumSystem sys = paper_system();
  TimeGrid grid{100.0, 256};
  ControlField f = random_transition_field(sys, grid, 7);
  PropagatorPath path = propagate(sys, f);
  REQUIRE(static_cast<int>(path.unitaries.size()) == grid.steps + 1);
  CHECK(max_abs(path.unitaries.front() - cxmat::Identity(11, 11)) < 1e-14);
  for (const cxmat& u : path.unitaries) CHECK(is_unitary(u, 1e-9));
}

TEST_CASE("step halving converges at first order to a fine-grid reference") {
  QuantumSystem sys = ladder_system(4);
  auto evolve = [&](int steps) {
    TimeGrid grid{20.0, steps};
    std::vector<SineMode> modes{{0.3, 0.5, 0.4}, {0.2, 0.9, 1.1}};
    return propagate(sys, ControlField::from_modes(grid, modes))
        .final_unitary();
  };
  cxmat ref = evolve(8192);
  double e1 = max_abs(evolve(64) - ref);
  double e2 = max_abs(evolve(128) - ref);
  double e3 = max_abs(evolve(256) - ref);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.2));
  CHECK(e2 / e3 == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("expectation of diagonal operators is the diagonal trace") {
  cxmat rho = cxmat::Zero(3, 3);
  rho(0, 0) = 0.5;
  rho(1, 1) = 0.3;
  rho(2, 2) = 0.2;
  cxmat th = cxmat::Zero(3, 3);
  th(0, 0) = 1;
  th(1, 1) = 2;
  th(2, 2) = 3;
  DensityMatrix dm{rho};
  Observable obs{th};
  CHECK(expectation(cxmat::Identity(3, 3), dm, obs) ==
        doctest::Approx(1.7).epsilon(1e-12));
}

TEST_CASE("brute force over eigenvalue pairings bounds the expectation") {
  // All 3! pairings of {0.5,0.3,0.2} against {1,2,3}; the best is
  // ascending-ascending: 0.2*1 + 0.3*2 + 0.5*3 = 2.3.
  cxmat rho = cxmat::Zero(3, 3);
  rho(0, 0) = 0.5;
  rho(1, 1) = 0.3;
  rho(2, 2) = 0.2;
  cxmat th = cxmat::Zero(3, 3);
  th(0, 0) = 1;
  th(1, 1) = 2;
  th(2, 2) = 3;
  DensityMatrix dm{rho};
  Observable obs{th};
  double best = -1e300;
  std::vector<int> perm{0, 1, 2};
  do {
    cxmat p = cxmat::Zero(3, 3);
    for (int i = 0; i < 3; ++i) p(perm[i], i) = 1.0;
    best = std::max(best, expectation(p, dm, obs));
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(best == doctest::Approx(2.3).epsilon(1e-12));
  // Random unitaries never exceed the matching bound.
  for (int s = 0; s < 10; ++s)
    CHECK(expectation(random_unitary(3, static_cast<std::uint64_t>(s)), dm,
                      obs) <= 2.3 + 1e-10);
}

TEST_CASE("expectation is linear and conjugation invariant") {
  std::mt19937_64 rng(11);
  cxmat u = random_unitary(4, rng);
  DensityMatrix rho = random_full_rank_state(4, 3);
  cxmat a = random_hermitian(4, rng);
  cxmat b = random_hermitian(4, rng);
  double lhs = expectation(u, rho.matrix(), cxmat(2.0 * a + 0.5 * b));
  double rhs = 2.0 * expectation(u, rho.matrix(), a) +
               0.5 * expectation(u, rho.matrix(), b);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  // Simultaneous conjugation of rho0 and Theta by V, with U -> V U V^dag.
  cxmat v = random_unitary(4, rng);
  double conj = expectation(cxmat(v * u * v.adjoint()),
                            cxmat(v * rho.matrix() * v.adjoint()),
                            cxmat(v * a * v.adjoint()));
  CHECK(conj == doctest::Approx(expectation(u, rho.matrix(), a)).epsilon(1e-9));
}

TEST_CASE("entropy: pure, mixed, and unitary invariance") {
  QuantumSystem sys = ladder_system(4);
  EntropyValue pure = von_neumann_entropy(ground_state(sys));
  CHECK(std::abs(pure.trace_rho_log_rho) < 1e-10);
  CHECK(std::abs(pure.shannon) < 1e-10);

  DensityMatrix mixed{cxmat(cxmat::Identity(4, 4) / 4.0)};
  EntropyValue ev = von_neumann_entropy(mixed);
  CHECK(ev.trace_rho_log_rho == doctest::Approx(-std::log(4.0)).epsilon(1e-12));
  CHECK(ev.shannon == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  DensityMatrix rho = random_full_rank_state(4, 5);
  cxmat u = random_unitary(4, 9);
  DensityMatrix rotated{cxmat(u * rho.matrix() * u.adjoint())};
  CHECK(von_neumann_entropy(rho).shannon ==
        doctest::Approx(von_neumann_entropy(rotated).shannon).epsilon(1e-10));
}

TEST_CASE("density matrix spectrum metadata") {
  DensityMatrix rho = random_full_rank_state(5, 2);
  int total = 0;
  for (int m : rho.spectrum().multiplicities) total += m;
  CHECK(total == 5);
  CHECK(rho.rank() == 5);
  CHECK(ground_state(ladder_system(5)).rank() == 1);
  // Eigenvalues ascend.
  for (int i = 1; i < 5; ++i)
    CHECK(rho.spectrum().values[i] >= rho.spectrum().values[i - 1]);
}

TEST_CASE("lie algebra rank: full controllability and abelian cases") {
  CHECK(lie_algebra_rank(paper_system()) == 121);

  cxmat h0 = cxmat::Zero(3, 3);
  h0(0, 0) = 0.1;
  h0(1, 1) = 0.5;
  h0(2, 2) = 1.0;
  cxmat mu = cxmat::Zero(3, 3);
  mu(0, 0) = 1.0;
  mu(1, 1) = 2.0;
  mu(2, 2) = -1.0;
  CHECK(lie_algebra_rank(QuantumSystem(h0, mu)) <= 3);

  cxmat h2 = cxmat::Zero(2, 2);
  h2(1, 1) = 1.0;
  cxmat m2 = cxmat::Zero(2, 2);
  m2(0, 1) = m2(1, 0) = 1.0;
  CHECK(lie_algebra_rank(QuantumSystem(h2, m2)) == 4);
}

TEST_CASE("lie algebra rank is basis independent") {
  QuantumSystem sys = ladder_system(3);
  cxmat v = random_unitary(3, 21);
  QuantumSystem rotated(cxmat(v * sys.h0() * v.adjoint()),
                        cxmat(v * sys.dipole() * v.adjoint()));
  CHECK(lie_algebra_rank(sys) == lie_algebra_rank(rotated));
}

TEST_CASE("unitary logarithm: identity, diagonal phases, round trip") {
  UnitaryLog zero = matrix_log_unitary(cxmat::Identity(3, 3));
  CHECK(max_abs(zero.hermitian) < 1e-12);
  CHECK_FALSE(zero.branch_ambiguous);

  cxmat u = cxmat::Zero(2, 2);
  u(0, 0) = std::polar(1.0, std::numbers::pi / 2);
  u(1, 1) = std::polar(1.0, -std::numbers::pi / 2);
  UnitaryLog lg = matrix_log_unitary(u);
  Eigen::VectorXd phases = lg.hermitian.diagonal().real();
  std::sort(phases.data(), phases.data() + 2);
  CHECK(phases[0] == doctest::Approx(-std::numbers::pi / 2).epsilon(1e-12));
  CHECK(phases[1] == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));

  for (int s = 0; s < 5; ++s) {
    cxmat w = random_unitary(4, static_cast<std::uint64_t>(s + 1));
    UnitaryLog l = matrix_log_unitary(w);
    CHECK(is_hermitian(l.hermitian, 1e-10));
    CHECK(max_abs(hermitian_propagator(l.hermitian, -1.0) - w) < 1e-9);
  }
}

TEST_CASE("non-Hermitian inputs are rejected") {
  cxmat bad = cxmat::Zero(2, 2);
  bad(0, 1) = 1.0;  // not Hermitian
  CHECK_THROWS(QuantumSystem(bad, cxmat::Identity(2, 2)));
  CHECK_THROWS(DensityMatrix(bad));
  CHECK_THROWS(Observable(bad));
  // Trace must be 1 for a density matrix.
  CHECK_THROWS(DensityMatrix(cxmat(cxmat::Identity(2, 2))));
}
