#include "qpareto/linalg.hpp"

#include <Eigen/SVD>

namespace qpareto {

cxmat polar_unitary(const cxmat& a) {
  Eigen::JacobiSVD<cxmat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

cxmat hermitian_propagator(const cxmat& h, double t) {
  Eigen::SelfAdjointEigenSolver<cxmat> es(h);
  const Eigen::VectorXd& w = es.eigenvalues();
  cxvec phases(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k)
    phases[k] = std::polar(1.0, -t * w[k]);
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

cxmat random_unitary(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  cxmat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = cxd(gauss(rng), gauss(rng));
  Eigen::HouseholderQR<cxmat> qr(g);
  cxmat q = qr.householderQ();
  cxmat r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fix the phase convention so Q is unique given G.
  for (int j = 0; j < n; ++j) {
    cxd d = r(j, j);
    q.col(j) *= d / std::abs(d);
  }
  return q;
}

cxmat random_hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  cxmat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = cxd(gauss(rng), gauss(rng));
  return 0.5 * (g + g.adjoint());
}

}  // namespace qpareto

namespace qpareto {

cxmat random_unitary(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_unitary(n, rng);
}

cxmat random_hermitian(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_hermitian(n, rng);
}

}  // namespace qpareto
