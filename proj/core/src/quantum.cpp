#include "qpareto/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qpareto {

std::vector<int> Spectrum::block_of_position() const {
  std::vector<int> out;
  out.reserve(values.size());
  for (int b = 0; b < blocks(); ++b)
    for (int i = 0; i < multiplicities[b]; ++i) out.push_back(b);
  return out;
}

Spectrum block_spectrum(const Eigen::VectorXd& ascending, double rel_gap) {
  Spectrum s;
  s.values = ascending;
  const Eigen::Index n = ascending.size();
  const double scale =
      std::max(1.0, std::max(std::abs(ascending[0]), std::abs(ascending[n - 1])));
  int start = 0;
  for (Eigen::Index i = 1; i <= n; ++i) {
    if (i == n || ascending[i] - ascending[i - 1] > rel_gap * scale) {
      s.multiplicities.push_back(static_cast<int>(i) - start);
      double sum = 0;
      for (Eigen::Index j = start; j < i; ++j) sum += ascending[j];
      s.distinct.push_back(sum / (static_cast<int>(i) - start));
      start = static_cast<int>(i);
    }
  }
  return s;
}

QuantumSystem::QuantumSystem(cxmat h0, cxmat dipole)
    : h0_(std::move(h0)), dipole_(std::move(dipole)) {
  if (h0_.rows() < 2) throw std::invalid_argument("QuantumSystem: dim must be >= 2");
  if (h0_.rows() != dipole_.rows() || h0_.cols() != dipole_.cols())
    throw std::invalid_argument("QuantumSystem: H0/dipole dimension mismatch");
  require_hermitian(h0_, "QuantumSystem H0");
  require_hermitian(dipole_, "QuantumSystem dipole");
  Eigen::SelfAdjointEigenSolver<cxmat> es(h0_, Eigen::EigenvaluesOnly);
  energies_ = es.eigenvalues();
}

DensityMatrix::DensityMatrix(cxmat rho) : rho_(std::move(rho)) {
  require_hermitian(rho_, "DensityMatrix", 1e-10);
  if (std::abs(rho_.trace().real() - 1.0) > 1e-10 ||
      std::abs(rho_.trace().imag()) > 1e-10)
    throw std::invalid_argument("DensityMatrix: trace must be 1");
  Eigen::SelfAdjointEigenSolver<cxmat> es(rho_);
  if (es.eigenvalues().minCoeff() < -1e-12)
    throw std::invalid_argument("DensityMatrix: negative eigenvalue");
  basis_ = es.eigenvectors();
  spectrum_ = block_spectrum(es.eigenvalues());
}

int DensityMatrix::rank(double tol) const {
  int r = 0;
  for (Eigen::Index i = 0; i < spectrum_.values.size(); ++i)
    if (spectrum_.values[i] > tol) ++r;
  return r;
}

Observable::Observable(cxmat theta) : theta_(std::move(theta)) {
  require_hermitian(theta_, "Observable", 1e-10);
  Eigen::SelfAdjointEigenSolver<cxmat> es(theta_);
  basis_ = es.eigenvectors();
  spectrum_ = block_spectrum(es.eigenvalues());
}

PropagatorPath propagate(const QuantumSystem& system, const ControlField& field) {
  const TimeGrid& grid = field.grid();
  const int n = system.dim();
  const double dt = grid.dt();
  PropagatorPath path;
  path.grid = grid;
  path.unitaries.reserve(grid.steps + 1);
  path.unitaries.push_back(cxmat::Identity(n, n));
  for (int j = 0; j < grid.steps; ++j) {
    cxmat h = system.h0() - field.value(j) * system.dipole();
    path.unitaries.push_back(hermitian_propagator(h, dt) * path.unitaries.back());
  }
  return path;
}

double expectation(const cxmat& u, const cxmat& rho0, const cxmat& theta) {
  if (u.rows() != rho0.rows() || u.rows() != theta.rows())
    throw std::invalid_argument("expectation: dimension mismatch");
  cxd val = (u * rho0 * u.adjoint() * theta).trace();
  if (std::abs(val.imag()) > 1e-10)
    throw std::runtime_error("expectation: imaginary residue above tolerance");
  return val.real();
}

double expectation(const cxmat& u, const DensityMatrix& rho0,
                   const Observable& theta) {
  return expectation(u, rho0.matrix(), theta.matrix());
}

Eigen::VectorXd expectations(const cxmat& u, const DensityMatrix& rho0,
                             const std::vector<Observable>& observables) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(observables.size()));
  cxmat evolved = u * rho0.matrix() * u.adjoint();
  for (std::size_t k = 0; k < observables.size(); ++k) {
    cxd val = (evolved * observables[k].matrix()).trace();
    out[static_cast<Eigen::Index>(k)] = val.real();
  }
  return out;
}

EntropyValue von_neumann_entropy(const DensityMatrix& rho) {
  double s = 0;
  for (Eigen::Index i = 0; i < rho.spectrum().values.size(); ++i) {
    double lam = rho.spectrum().values[i];
    if (lam < -1e-12)
      throw std::invalid_argument("von_neumann_entropy: negative eigenvalue");
    if (lam > 0) s += lam * std::log(lam);
  }
  return {s, -s};
}

namespace {

// Real vectorization of an anti-Hermitian matrix (the tangent space basis).
Eigen::VectorXd vectorize_antihermitian(const cxmat& a) {
  const int n = static_cast<int>(a.rows());
  Eigen::VectorXd v(n * n);
  int idx = 0;
  for (int i = 0; i < n; ++i) v[idx++] = a(i, i).imag();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      v[idx++] = a(i, j).real();
      v[idx++] = a(i, j).imag();
    }
  return v;
}

}  // namespace

int lie_algebra_rank(const QuantumSystem& system, double sv_tol) {
  const int n = system.dim();
  const int full = n * n;
  const cxd imag_unit(0.0, 1.0);

  std::vector<cxmat> elements;
  elements.push_back(imag_unit * system.h0());
  elements.push_back(imag_unit * system.dipole());

  auto rank_of = [&](const std::vector<cxmat>& els) {
    Eigen::MatrixXd m(full, static_cast<Eigen::Index>(els.size()));
    for (std::size_t k = 0; k < els.size(); ++k)
      m.col(static_cast<Eigen::Index>(k)) = vectorize_antihermitian(els[k]);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    int r = 0;
    double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()[i] > sv_tol * std::max(1.0, smax)) ++r;
    return r;
  };

  int rank = rank_of(elements);
  std::size_t processed = 0;
  while (rank < full) {
    std::size_t count = elements.size();
    bool grew = false;
    for (std::size_t i = processed; i < count; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        cxmat c = elements[i] * elements[j] - elements[j] * elements[i];
        if (max_abs(c) < 1e-14) continue;
        elements.push_back(c / max_abs(c));
        int r = rank_of(elements);
        if (r > rank) {
          rank = r;
          grew = true;
          if (rank == full) return rank;
        } else {
          elements.pop_back();
        }
      }
    }
    processed = count;
    if (!grew && processed == elements.size()) break;
  }
  return rank;
}

UnitaryLog matrix_log_unitary(const cxmat& u) {
  require_unitary(u, "matrix_log_unitary");
  // Unitary matrices are normal, so the Schur form is diagonal and the Schur
  // basis is an orthonormal eigenbasis (robust under degeneracies).
  Eigen::ComplexSchur<cxmat> schur(u);
  const cxmat& q = schur.matrixU();
  UnitaryLog out;
  out.branch_ambiguous = false;
  const int n = static_cast<int>(u.rows());
  Eigen::VectorXd phases(n);
  for (int i = 0; i < n; ++i) {
    double theta = std::arg(schur.matrixT()(i, i));
    if (theta <= -std::numbers::pi + 1e-15) theta = std::numbers::pi;  // (-pi, pi]
    if (std::numbers::pi - std::abs(theta) < 1e-9) out.branch_ambiguous = true;
    phases[i] = theta;
  }
  out.hermitian = q * phases.asDiagonal() * q.adjoint();
  return out;
}

}  // namespace qpareto
