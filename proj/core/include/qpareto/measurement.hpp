#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qpareto/quantum.hpp"

namespace qpareto {

// N+1 mutually unbiased orthonormal bases for odd prime N; bases[0] is the
// computational basis and every cross-basis overlap probability is 1/N.
struct MubFamily {
  int dim = 0;
  std::vector<cxmat> bases;
};

// V^(0) = I, V^(r)_pq = N^{-1/2} exp[(2 pi i / N)(r q^2 + p q)], 1 <= r <= N.
// Throws unless N is an odd prime; unitarity and unbiasedness are checked
// exhaustively at construction.
MubFamily build_mub(int n);

// The (N+1)(N-1) rank-1 projectors V^(r) |i><i| V^(r)dag, i = 1..N-1, laid
// out as index r*(N-1) + (i-1).
std::vector<Observable> mub_observables(const MubFamily& family);

// Synthetic nondegenerate observable V^(r) diag(1..N) V^(r)dag measuring the
// whole basis r at once.
Observable mub_full_rank_observable(const MubFamily& family, int r);

struct ShotRecord {
  int basis_index = -1;
  long long shots = 0;
  std::vector<long long> counts;  // one per outcome, summing to shots
  std::uint64_t seed = 0;
};

// Multinomial draw from p_i = Tr(rho V|i><i|V^dag); the last probability is
// taken as one minus the rest. Deterministic under the seed.
ShotRecord simulate_measurement(const DensityMatrix& rho, const cxmat& basis,
                                long long shots, std::uint64_t seed,
                                int basis_index = -1);

// Merge outcome counts whose outcomes share a class (e.g. eigenvalue blocks
// of a degenerate diagonal observable): s classes leave s-1 independent
// frequencies.
std::vector<long long> group_outcomes(const ShotRecord& record,
                                      const std::vector<int>& outcome_class,
                                      int n_classes);

struct ExpectationEstimate {
  double value = 0.0;
  double standard_error = 0.0;  // from the multinomial covariance
};

// Plug-in estimate sum_i c_i gamma_i p_hat_i from empirical frequencies.
ExpectationEstimate expectation_from_frequencies(
    const ShotRecord& record, const Eigen::VectorXd& coefficients,
    const Eigen::VectorXd& eigenvalues);

struct StateEstimate {
  DensityMatrix rho_hat;
  double log_likelihood = 0.0;
  int iterations = 0;
  std::optional<double> fidelity_vs_truth;
  bool complete = true;                   // measurement set spans Hermitians
  std::vector<double> likelihood_trace;   // non-decreasing by construction
};

// Maximum-likelihood state reconstruction over the Cholesky factorization
// rho = T^dag T (T lower triangular, real diagonal), by projected gradient
// ascent with a monotone line search on
//   L(T) = sum_i c_i ln Tr(T^dag T F_i) - n Tr(T^dag T).
// Rank-1 projector outcomes F_i come from the listed bases; an incomplete
// set flags the estimate instead of failing.
StateEstimate mle_estimate(const std::vector<ShotRecord>& records,
                           const std::vector<cxmat>& bases,
                           std::uint64_t init_seed = 1,
                           const std::optional<cxmat>& truth = std::nullopt);

// Same estimator fed with exact outcome probabilities of rho (the
// infinite-shot limit) on the given bases.
StateEstimate mle_estimate_exact(const DensityMatrix& rho,
                                 const std::vector<cxmat>& bases,
                                 std::uint64_t init_seed = 1);

// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2.
double fidelity(const cxmat& a, const cxmat& b);

}  // namespace qpareto
