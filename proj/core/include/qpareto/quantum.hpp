#pragma once

#include <vector>

#include "qpareto/field.hpp"
#include "qpareto/linalg.hpp"

namespace qpareto {

// Ascending eigenvalues grouped into degeneracy blocks. Eigenvalues whose
// relative gap is below the merge threshold share a block.
struct Spectrum {
  Eigen::VectorXd values;           // all N, ascending
  std::vector<int> multiplicities;  // block sizes, sum to N
  std::vector<double> distinct;     // representative value per block

  int blocks() const { return static_cast<int>(multiplicities.size()); }
  // Block index of each position 0..N-1.
  std::vector<int> block_of_position() const;
};

Spectrum block_spectrum(const Eigen::VectorXd& ascending,
                        double rel_gap = 1e-9);

class QuantumSystem {
 public:
  QuantumSystem(cxmat h0, cxmat dipole);

  int dim() const { return static_cast<int>(h0_.rows()); }
  const cxmat& h0() const { return h0_; }
  const cxmat& dipole() const { return dipole_; }
  // Ascending eigenvalues of H0.
  const Eigen::VectorXd& energies() const { return energies_; }

 private:
  cxmat h0_;
  cxmat dipole_;
  Eigen::VectorXd energies_;
};

class DensityMatrix {
 public:
  explicit DensityMatrix(cxmat rho);

  int dim() const { return static_cast<int>(rho_.rows()); }
  const cxmat& matrix() const { return rho_; }
  const Spectrum& spectrum() const { return spectrum_; }
  // Columns are eigenvectors in ascending eigenvalue order.
  const cxmat& eigenbasis() const { return basis_; }
  int rank(double tol = 1e-10) const;

 private:
  cxmat rho_;
  cxmat basis_;
  Spectrum spectrum_;
};

class Observable {
 public:
  explicit Observable(cxmat theta);

  int dim() const { return static_cast<int>(theta_.rows()); }
  const cxmat& matrix() const { return theta_; }
  const Spectrum& spectrum() const { return spectrum_; }
  const cxmat& eigenbasis() const { return basis_; }

 private:
  cxmat theta_;
  cxmat basis_;
  Spectrum spectrum_;
};

struct PropagatorPath {
  TimeGrid grid;
  std::vector<cxmat> unitaries;  // grid.steps + 1 entries, U(t_0) = I

  const cxmat& final_unitary() const { return unitaries.back(); }
};

// Piecewise-constant-field evolution; each step applies
// exp(-i dt (H0 - mu eps(t_j))) via Hermitian eigendecomposition.
PropagatorPath propagate(const QuantumSystem& system, const ControlField& field);

// Tr(U rho U^dag Theta); asserts the imaginary residue is below tolerance.
double expectation(const cxmat& u, const DensityMatrix& rho0,
                   const Observable& theta);
double expectation(const cxmat& u, const cxmat& rho0, const cxmat& theta);

Eigen::VectorXd expectations(const cxmat& u, const DensityMatrix& rho0,
                             const std::vector<Observable>& observables);

struct EntropyValue {
  double trace_rho_log_rho;  // Tr(rho log rho), <= 0
  double shannon;            // -Tr(rho log rho)
};

EntropyValue von_neumann_entropy(const DensityMatrix& rho);

// Dimension of the real Lie algebra generated by {iH0, i mu} under repeated
// commutators; numerical rank with a singular-value threshold.
int lie_algebra_rank(const QuantumSystem& system, double sv_tol = 1e-8);

struct UnitaryLog {
  cxmat hermitian;        // A with exp(iA) = U, eigenphases in (-pi, pi]
  bool branch_ambiguous;  // some eigenphase at the -pi branch cut
};

UnitaryLog matrix_log_unitary(const cxmat& u);

}  // namespace qpareto
