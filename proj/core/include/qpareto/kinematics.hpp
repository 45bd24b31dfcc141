#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qpareto/quantum.hpp"

namespace qpareto {

// ---------------------------------------------------------------------------
// Gradient flow on U(N)

struct KinematicFlowResult {
  cxmat u;                          // final unitary
  std::vector<double> objective;    // Phi_M at each accepted step (incl. start)
  Eigen::VectorXd expectations;     // per-observable, at the final unitary
  int steps_taken = 0;
  bool converged = false;           // gradient norm fell below tolerance
  double gradient_norm = 0.0;
};

// Explicit Euler on dU/ds = sum_k alpha_k [Theta_k, U rho0 U^dag] U with polar
// re-unitarization each step; the weighted objective never decreases between
// accepted steps (step size halves on violation). Throws on step underflow.
KinematicFlowResult kinematic_flow(const DensityMatrix& rho0,
                                   const std::vector<Observable>& observables,
                                   const Eigen::VectorXd& weights,
                                   const cxmat& u_init, int steps = 2000,
                                   double step_size = 0.1,
                                   double gradient_tol = 1e-8);

// Kinematic range of one expectation: ascending-ascending eigenvalue matching
// for the max, ascending-descending for the min.
std::pair<double, double> matching_extrema(const DensityMatrix& rho0,
                                           const Observable& theta);

// ---------------------------------------------------------------------------
// Feasibility of a joint expectation target

struct FeasibleTargetResult {
  bool found = false;               // residual below threshold (a stall is not
                                    // a proof of infeasibility)
  cxmat u;
  double residual = 0.0;            // sqrt(sum_k (Phi_k - chi_k)^2)
  Eigen::VectorXd achieved;
  double entropy = 0.0;             // S(U rho0 U^dag); unitarily invariant
  bool overdetermined = false;      // m > 2Nn - n^2, n = rank(rho0)
  // Least-committed reference state exp(sum lambda_k Theta_k)/Z fitted to the
  // same targets.
  std::optional<DensityMatrix> surrogate;
  Eigen::VectorXd surrogate_lambdas;
  bool surrogate_converged = false;
};

FeasibleTargetResult feasible_target_solver(
    const DensityMatrix& rho0, const std::vector<Observable>& observables,
    const Eigen::VectorXd& targets, std::uint64_t seed = 17,
    int restarts = 8, int max_iterations = 3000);

// ---------------------------------------------------------------------------
// Critical-submanifold combinatorics

// Integer table of eigenvalue-multiplicity overlaps; row sums must reproduce
// the first multiplicity vector and column sums the second.
struct ContingencyTable {
  std::vector<int> rows;
  std::vector<int> cols;
  Eigen::MatrixXi entries;
};

// Partition of all N! diagonal arrangements into critical classes of
// Tr(U rho0 U^dag Theta). Permutations map positions of the ascending rho0
// spectrum to slots of the ascending Theta spectrum; two arrangements are
// equivalent iff they induce the same block-overlap table.
struct PermutationClassPartition {
  int n = 0;
  std::vector<std::vector<std::vector<int>>> classes;
  std::vector<ContingencyTable> tables;       // block-overlap signature
  std::vector<double> critical_values;
  std::vector<int> dimensions;
  int class_of_max = -1;                      // ascending-ascending class

  int class_of(const std::vector<int>& permutation) const;
};

// N <= 8 (full N! enumeration).
PermutationClassPartition partition_permutations(const DensityMatrix& rho0,
                                                 const Observable& theta);

// dim = sum n_x^2 + sum m_y^2 - sum v_xy^2. Throws on inconsistent tables.
int critical_dimension(const std::vector<int>& rho_multiplicities,
                       const std::vector<int>& theta_multiplicities,
                       const ContingencyTable& table);

struct IntersectionBounds {
  int upper = 0;
  bool commuting = false;
  bool has_common_permutation = false;  // some arrangement lies in both classes
  int lower = 0;                        // valid only with the two flags above
};

// Dimension bounds for the intersection of critical class i of theta_a with
// class j of theta_b. The upper bound (min of the two class dimensions) is
// always available; the lower bound needs [theta_a, theta_b] = 0 and a common
// arrangement.
IntersectionBounds intersection_bounds(const DensityMatrix& rho0,
                                       const Observable& theta_a,
                                       const Observable& theta_b, int class_i,
                                       int class_j);

// ---------------------------------------------------------------------------
// Convergence diagnostics and weight design for commuting observables

enum class ParetoVerdict {
  kNone,
  kMayConvergeWeak,
  kGuaranteedWeak,
  kMayConvergeStrong,
};

struct Lemma1Report {
  std::vector<ParetoVerdict> verdicts;  // per observable
  bool may_converge_strong = false;     // all observables pass the weak test
};

// For commuting observables and weights alpha: compares the max class of each
// Theta_k with that of Theta_M = sum alpha_k Theta_k.
Lemma1Report lemma1_check(const DensityMatrix& rho0,
                          const std::vector<Observable>& observables,
                          const Eigen::VectorXd& weights);

struct WeightSolution {
  bool feasible = false;
  Eigen::VectorXd alpha;            // strictly positive, sums to 1
  std::vector<int> arrangement;     // the permutation realizing the classes
  std::string diagnostic;
};

// Find weights making the weighted sum's maximum land in the requested
// critical class of every observable: linear feasibility over the dominance
// inequalities of each candidate arrangement. Commuting observables, N <= 6.
WeightSolution weight_solver(const DensityMatrix& rho0,
                             const std::vector<Observable>& observables,
                             const std::vector<int>& requested_classes);

// Orthonormal basis diagonalizing every matrix of a commuting family, columns
// ordered so the first matrix's eigenvalues ascend (ties broken by the later
// matrices). Throws if the family does not commute within tol.
cxmat simultaneous_eigenbasis(const std::vector<cxmat>& matrices,
                              double tol = 1e-10);

}  // namespace qpareto
