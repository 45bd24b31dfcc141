#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace qpareto {

using cxmat = Eigen::MatrixXcd;
using cxvec = Eigen::VectorXcd;
using cxd = std::complex<double>;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kUnitaryTol = 1e-9;

inline double max_abs(const cxmat& a) { return a.cwiseAbs().maxCoeff(); }

inline bool is_hermitian(const cxmat& a, double tol = kHermitianTol) {
  return a.rows() == a.cols() && max_abs(a - a.adjoint()) <= tol;
}

inline bool is_unitary(const cxmat& u, double tol = kUnitaryTol) {
  return u.rows() == u.cols() &&
         max_abs(u.adjoint() * u - cxmat::Identity(u.rows(), u.cols())) <= tol;
}

inline void require_hermitian(const cxmat& a, const char* what,
                              double tol = kHermitianTol) {
  if (!is_hermitian(a, tol))
    throw std::invalid_argument(std::string(what) + ": matrix is not Hermitian");
}

inline void require_unitary(const cxmat& u, const char* what,
                            double tol = kUnitaryTol) {
  if (!is_unitary(u, tol))
    throw std::invalid_argument(std::string(what) + ": matrix is not unitary");
}

// Hilbert-Schmidt inner product; real for Hermitian arguments.
inline double hs_inner(const cxmat& a, const cxmat& b) {
  return (a.adjoint() * b).trace().real();
}

// Nearest unitary (polar factor) of an invertible matrix.
cxmat polar_unitary(const cxmat& a);

// exp(-i * t * H) for Hermitian H, via eigendecomposition.
cxmat hermitian_propagator(const cxmat& h, double t);

// Haar-ish random unitary: QR of a complex Gaussian matrix, phases fixed so
// the result is deterministic under the seed.
cxmat random_unitary(int n, std::mt19937_64& rng);
cxmat random_unitary(int n, std::uint64_t seed);

// Random Hermitian matrix with entries of O(1).
cxmat random_hermitian(int n, std::mt19937_64& rng);
cxmat random_hermitian(int n, std::uint64_t seed);

}  // namespace qpareto
