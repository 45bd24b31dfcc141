#include "qpareto/gradient.hpp"

#include <cmath>
#include <numbers>

namespace qpareto {

GradientVector functional_gradient(const QuantumSystem& system,
                                   const ControlField& field,
                                   const DensityMatrix& rho0,
                                   const std::vector<Observable>& observables,
                                   const PropagatorPath& path) {
  const int m = static_cast<int>(observables.size());
  const int n = system.dim();
  const int steps = path.grid.steps;
  const double dt = path.grid.dt();
  if (static_cast<int>(path.unitaries.size()) != steps + 1 ||
      !(field.grid() == path.grid))
    throw std::invalid_argument("functional_gradient: path/field grid mismatch");

  const cxmat& ut = path.final_unitary();
  // C_i = rho0 U^dag(T) Theta_i U(T).
  std::vector<cxmat> weighted;
  weighted.reserve(m);
  for (const Observable& obs : observables)
    weighted.push_back(rho0.matrix() * (ut.adjoint() * obs.matrix() * ut));

  GradientVector grad;
  grad.grid = path.grid;
  grad.samples.resize(m, steps);

  // Exact derivative of the piecewise-constant map: per step the Frechet
  // derivative of exp(-i dt H_j) in the dipole direction, via divided
  // differences in the step eigenbasis. Reduces to the continuum expression
  // -i Tr(rho0 [Theta(T), mu(t)]) as dt -> 0, and agrees with central finite
  // differences of the discrete propagation to solver precision.
  for (int j = 0; j < steps; ++j) {
    cxmat h = system.h0() - field.value(j) * system.dipole();
    Eigen::SelfAdjointEigenSolver<cxmat> es(h);
    const Eigen::VectorXd& d = es.eigenvalues();
    const cxmat& v = es.eigenvectors();

    cxmat mu_v = v.adjoint() * system.dipole() * v;
    // L_ab = (i dt mu)_ab * psi(x_a, x_b), psi(x,y) = (e^x - e^y)/(x - y)
    // with x_a = -i dt d_a.
    cxmat l(n, n);
    cxvec phase(n);
    for (int a = 0; a < n; ++a) phase[a] = std::polar(1.0, -dt * d[a]);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        cxd xa = cxd(0.0, -dt * d[a]), xb = cxd(0.0, -dt * d[b]);
        cxd psi = (std::abs(dt * (d[a] - d[b])) < 1e-12)
                      ? phase[a]
                      : (phase[a] - phase[b]) / (xa - xb);
        l(a, b) = cxd(0.0, dt) * mu_v(a, b) * psi;
      }
    }
    // G = U(t_j)^dag U_j^dag (dU_j/deps) U(t_j)
    cxmat g = path.unitaries[j].adjoint() *
              (v * (phase.conjugate().asDiagonal() * l) * v.adjoint()) *
              path.unitaries[j];
    // tr(G C_i) accumulated entrywise: O(N^2) per observable.
    for (int i = 0; i < m; ++i)
      grad.samples(i, j) =
          2.0 / dt *
          g.cwiseProduct(weighted[i].transpose()).sum().real();
  }
  return grad;
}

OrthogonalObservableBasis gram_schmidt(const std::vector<Observable>& observables) {
  const int m = static_cast<int>(observables.size());
  OrthogonalObservableBasis out;
  out.coefficients = Eigen::MatrixXd::Zero(m, m);
  std::vector<cxmat> basis;
  for (int k = 0; k < m; ++k) {
    cxmat residual = observables[k].matrix();
    for (int i = 0; i < static_cast<int>(basis.size()); ++i)
      residual -= hs_inner(basis[i], observables[k].matrix()) * basis[i];
    double norm = std::sqrt(hs_inner(residual, residual));
    if (norm < 1e-10 * std::max(1.0, std::sqrt(hs_inner(observables[k].matrix(),
                                                        observables[k].matrix()))))
      throw std::invalid_argument("gram_schmidt: observable " + std::to_string(k) +
                                  " is linearly dependent on its predecessors");
    basis.push_back(residual / norm);
  }
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < m; ++i)
      out.coefficients(k, i) = hs_inner(basis[i], observables[k].matrix());
  for (cxmat& b : basis) out.basis.emplace_back(std::move(b));
  return out;
}

Eigen::VectorXd expectation_gradient_from_basis(
    const OrthogonalObservableBasis& basis, int k, const QuantumSystem& system,
    const ControlField& field, const DensityMatrix& rho0,
    const PropagatorPath& path) {
  if (k < 0 || k >= basis.coefficients.rows())
    throw std::out_of_range("expectation_gradient_from_basis: index out of range");
  GradientVector basis_grad =
      functional_gradient(system, field, rho0, basis.basis, path);
  return basis_grad.samples.transpose() * basis.coefficients.row(k).transpose();
}

Eigen::VectorXd monte_carlo_gradient(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& x0, double sigma, int n_samples, std::uint64_t seed,
    McGradientMode mode) {
  if (sigma <= 0) throw std::invalid_argument("monte_carlo_gradient: singular covariance");
  const Eigen::Index d = x0.size();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
  const double log_norm =
      -0.5 * d * std::log(2.0 * std::numbers::pi * sigma * sigma);
  for (int i = 0; i < n_samples; ++i) {
    // Per-sample RNG stream: results are independent of evaluation order.
    std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ull * (i + 1));
    std::normal_distribution<double> gauss(0.0, sigma);
    Eigen::VectorXd dx(d);
    for (Eigen::Index j = 0; j < d; ++j) dx[j] = gauss(rng);
    double weight = objective(x0 + dx);
    if (mode == McGradientMode::kDensityWeighted)
      weight *= std::exp(log_norm - 0.5 * dx.squaredNorm() / (sigma * sigma));
    acc += dx * weight;
  }
  // Analytic covariance of the isotropic Gaussian sampler: sigma^2 I.
  return acc / (sigma * sigma * n_samples);
}

}  // namespace qpareto
