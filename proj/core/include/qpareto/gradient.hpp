#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qpareto/quantum.hpp"

namespace qpareto {

// Functional gradients a^i(t_j) of the tracked observable expectations with
// respect to the control, one row per observable, one column per grid step.
struct GradientVector {
  TimeGrid grid;
  Eigen::MatrixXd samples;  // m x steps

  int observable_count() const { return static_cast<int>(samples.rows()); }
};

// a^i(t) = -i Tr(rho0 [U^dag(T) Theta_i U(T), mu(t)]), mu(t) = U^dag(t) mu U(t).
GradientVector functional_gradient(const QuantumSystem& system,
                                   const ControlField& field,
                                   const DensityMatrix& rho0,
                                   const std::vector<Observable>& observables,
                                   const PropagatorPath& path);

struct OrthogonalObservableBasis {
  std::vector<Observable> basis;   // Tr(B_i B_j) = delta_ij
  Eigen::MatrixXd coefficients;    // m x m, Theta_k = sum_i c(k,i) B_i
};

// Gram-Schmidt under the Hilbert-Schmidt inner product. Throws on linear
// dependence, reporting the index of the offending observable.
OrthogonalObservableBasis gram_schmidt(const std::vector<Observable>& observables);

// Gradient of <Theta_k> recovered from the orthogonal-basis expansion; equals
// the direct functional gradient of Theta_k.
Eigen::VectorXd expectation_gradient_from_basis(
    const OrthogonalObservableBasis& basis, int k, const QuantumSystem& system,
    const ControlField& field, const DensityMatrix& rho0,
    const PropagatorPath& path);

enum class McGradientMode {
  kSamplingMeasure,   // samples drawn from pi; plain covariance-scaled mean
  kDensityWeighted,   // the density appears as an explicit weight as well
};

// Statistical gradient estimate from symmetric sampling around x0 with an
// isotropic Gaussian of width sigma.
Eigen::VectorXd monte_carlo_gradient(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& x0, double sigma, int n_samples, std::uint64_t seed,
    McGradientMode mode = McGradientMode::kSamplingMeasure);

}  // namespace qpareto
