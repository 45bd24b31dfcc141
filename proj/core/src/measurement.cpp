#include "qpareto/measurement.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace qpareto {

namespace {

bool is_odd_prime(int n) {
  if (n < 3 || n % 2 == 0) return false;
  for (int d = 3; d * d <= n; d += 2)
    if (n % d == 0) return false;
  return true;
}

}  // namespace

MubFamily build_mub(int n) {
  if (!is_odd_prime(n))
    throw std::invalid_argument(
        "build_mub: dimension must be an odd prime (got " + std::to_string(n) +
        ")");
  MubFamily fam;
  fam.dim = n;
  fam.bases.push_back(cxmat::Identity(n, n));
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (int r = 1; r <= n; ++r) {
    cxmat v(n, n);
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) {
        // Quadratic Gauss-sum phase in the component index p; column q is
        // the q-th vector of basis r.
        long long phase = (static_cast<long long>(r) * p * p + 1LL * p * q) % n;
        v(p, q) = norm * std::polar(1.0, 2.0 * std::numbers::pi * phase / n);
      }
    fam.bases.push_back(std::move(v));
  }
  // Exhaustive construction check: unitarity and pairwise unbiasedness.
  for (const cxmat& v : fam.bases)
    if (!is_unitary(v, 1e-10))
      throw std::logic_error("build_mub: basis not unitary");
  for (size_t a = 0; a < fam.bases.size(); ++a)
    for (size_t b = a + 1; b < fam.bases.size(); ++b)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double overlap =
              std::norm(fam.bases[a].col(i).dot(fam.bases[b].col(j)));
          if (std::abs(overlap - 1.0 / n) > 1e-9)
            throw std::logic_error("build_mub: bases not unbiased");
        }
  return fam;
}

std::vector<Observable> mub_observables(const MubFamily& family) {
  const int n = family.dim;
  std::vector<Observable> out;
  out.reserve(static_cast<size_t>(family.bases.size()) * (n - 1));
  for (const cxmat& v : family.bases)
    for (int i = 1; i < n; ++i)
      out.emplace_back(cxmat(v.col(i) * v.col(i).adjoint()));
  return out;
}

Observable mub_full_rank_observable(const MubFamily& family, int r) {
  if (r < 0 || r >= static_cast<int>(family.bases.size()))
    throw std::out_of_range("mub_full_rank_observable: basis index");
  const int n = family.dim;
  Eigen::VectorXcd d(n);
  for (int i = 0; i < n; ++i) d[i] = static_cast<double>(i + 1);
  const cxmat& v = family.bases[r];
  return Observable(cxmat(v * d.asDiagonal() * v.adjoint()));
}

ShotRecord simulate_measurement(const DensityMatrix& rho, const cxmat& basis,
                                long long shots, std::uint64_t seed,
                                int basis_index) {
  if (shots < 1) throw std::invalid_argument("simulate_measurement: shots < 1");
  require_unitary(basis, "simulate_measurement basis");
  const int n = rho.dim();

  Eigen::VectorXd p(n);
  for (int i = 0; i < n; ++i)
    p[i] = (basis.col(i).adjoint() * rho.matrix() * basis.col(i)).value().real();
  for (int i = 0; i < n; ++i)
    if (p[i] < -1e-10 || p[i] > 1.0 + 1e-10)
      throw std::invalid_argument("simulate_measurement: probability outside [0,1]");
  p = p.cwiseMax(0.0);
  // The last outcome carries the complement of the first N-1 frequencies.
  p[n - 1] = std::max(0.0, 1.0 - p.head(n - 1).sum());

  Eigen::VectorXd cdf(n);
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    acc += p[i];
    cdf[i] = acc;
  }
  cdf[n - 1] = 1.0;

  ShotRecord rec;
  rec.basis_index = basis_index;
  rec.shots = shots;
  rec.seed = seed;
  rec.counts.assign(n, 0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (long long s = 0; s < shots; ++s) {
    double u = unit(rng);
    int i = 0;
    while (i < n - 1 && u >= cdf[i]) ++i;
    ++rec.counts[i];
  }
  return rec;
}

std::vector<long long> group_outcomes(const ShotRecord& record,
                                      const std::vector<int>& outcome_class,
                                      int n_classes) {
  if (outcome_class.size() != record.counts.size())
    throw std::invalid_argument("group_outcomes: class map size mismatch");
  std::vector<long long> grouped(n_classes, 0);
  for (size_t i = 0; i < outcome_class.size(); ++i) {
    if (outcome_class[i] < 0 || outcome_class[i] >= n_classes)
      throw std::out_of_range("group_outcomes: class index");
    grouped[outcome_class[i]] += record.counts[i];
  }
  return grouped;
}

ExpectationEstimate expectation_from_frequencies(
    const ShotRecord& record, const Eigen::VectorXd& coefficients,
    const Eigen::VectorXd& eigenvalues) {
  const Eigen::Index n = static_cast<Eigen::Index>(record.counts.size());
  if (coefficients.size() != n || eigenvalues.size() != n)
    throw std::invalid_argument(
        "expectation_from_frequencies: outcome count mismatch");
  Eigen::VectorXd freq(n);
  for (Eigen::Index i = 0; i < n; ++i)
    freq[i] = static_cast<double>(record.counts[i]) / record.shots;
  Eigen::VectorXd a = coefficients.cwiseProduct(eigenvalues);

  ExpectationEstimate est;
  est.value = a.dot(freq);
  // Var = a^T Cov a with Cov_ij = (p_i d_ij - p_i p_j)/n, plug-in p = freq.
  double var = 0;
  double mean = a.dot(freq);
  for (Eigen::Index i = 0; i < n; ++i)
    var += freq[i] * (a[i] - mean) * (a[i] - mean);
  est.standard_error = std::sqrt(std::max(0.0, var / record.shots));
  return est;
}

double fidelity(const cxmat& a, const cxmat& b) {
  Eigen::SelfAdjointEigenSolver<cxmat> es(a);
  cxmat sqrt_a = es.eigenvectors() *
                 es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                 es.eigenvectors().adjoint();
  Eigen::SelfAdjointEigenSolver<cxmat> es2(sqrt_a * b * sqrt_a);
  double tr = es2.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return tr * tr;
}

namespace {

cxmat project_lower_real_diag(cxmat t) {
  const Eigen::Index n = t.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    t(i, i) = t(i, i).real();
    for (Eigen::Index j = i + 1; j < n; ++j) t(i, j) = 0.0;
  }
  return t;
}

StateEstimate mle_core(int dim, const std::vector<cxmat>& projectors,
                       const Eigen::VectorXd& counts, double total,
                       std::uint64_t init_seed,
                       const std::optional<cxmat>& truth) {
  const int k = static_cast<int>(projectors.size());

  // Informational completeness: real-vectorized projectors must span the
  // Hermitian space (dim^2 real dimensions). An incomplete set only flags
  // the estimate as rank-deficient.
  bool complete = true;
  {
    Eigen::MatrixXd rows(k, dim * dim);
    for (int i = 0; i < k; ++i) {
      int c = 0;
      for (int p = 0; p < dim; ++p) {
        rows(i, c++) = projectors[i](p, p).real();
        for (int q = p + 1; q < dim; ++q) {
          rows(i, c++) = projectors[i](p, q).real();
          rows(i, c++) = projectors[i](p, q).imag();
        }
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows);
    int rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()[i] > 1e-10 * svd.singularValues()[0]) ++rank;
    complete = rank == dim * dim;
  }

  // Start at the maximally mixed factor with a small seeded lower-triangular
  // perturbation to break symmetry.
  std::mt19937_64 rng(init_seed);
  std::normal_distribution<double> gauss(0.0, 1e-3);
  cxmat t = cxmat::Identity(dim, dim) / std::sqrt(static_cast<double>(dim));
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j)
      t(i, j) += (i == j) ? cxd(gauss(rng), 0.0) : cxd(gauss(rng), gauss(rng));

  auto likelihood = [&](const cxmat& tt) {
    cxmat rho = tt.adjoint() * tt;
    double l = -total * rho.trace().real();
    for (int i = 0; i < k; ++i) {
      if (counts[i] <= 0) continue;
      double pr = (rho * projectors[i]).trace().real();
      l += counts[i] * std::log(std::max(pr, 1e-300));
    }
    return l;
  };

  StateEstimate est{DensityMatrix(
      cxmat(cxmat::Identity(dim, dim) / static_cast<double>(dim)))};
  double l = likelihood(t);
  est.likelihood_trace.push_back(l);
  double step = 1.0 / std::max(1.0, total);
  int flat = 0;
  for (int it = 0; it < 5000; ++it) {
    cxmat rho = t.adjoint() * t;
    cxmat g = -total * t;
    for (int i = 0; i < k; ++i) {
      if (counts[i] <= 0) continue;
      double pr = (rho * projectors[i]).trace().real();
      g += counts[i] / std::max(pr, 1e-300) * (t * projectors[i]);
    }
    g = project_lower_real_diag(std::move(g));
    if (g.norm() < 1e-12 * std::max(1.0, total)) break;
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      cxmat trial = t + step * g;
      double lt = likelihood(trial);
      if (lt > l) {
        double gain = lt - l;
        t = std::move(trial);
        l = lt;
        step *= 1.5;
        moved = true;
        flat = gain < 1e-10 * std::max(1.0, std::abs(l)) ? flat + 1 : 0;
        break;
      }
      step *= 0.5;
    }
    est.likelihood_trace.push_back(l);
    est.iterations = it + 1;
    if (!moved || flat >= 5) break;
  }

  cxmat rho = t.adjoint() * t;
  rho /= rho.trace().real();
  rho = (rho + cxmat(rho.adjoint())) / 2.0;
  est.rho_hat = DensityMatrix(rho);
  est.complete = complete;
  est.log_likelihood = l;
  if (truth) est.fidelity_vs_truth = fidelity(*truth, rho);
  return est;
}

std::vector<cxmat> basis_projectors(const cxmat& basis) {
  std::vector<cxmat> out;
  for (Eigen::Index i = 0; i < basis.cols(); ++i)
    out.emplace_back(basis.col(i) * basis.col(i).adjoint());
  return out;
}

}  // namespace

StateEstimate mle_estimate(const std::vector<ShotRecord>& records,
                           const std::vector<cxmat>& bases,
                           std::uint64_t init_seed,
                           const std::optional<cxmat>& truth) {
  if (records.empty()) throw std::invalid_argument("mle_estimate: no records");
  const int dim = static_cast<int>(bases.at(0).rows());
  std::vector<cxmat> projectors;
  std::vector<double> counts;
  double total = 0;
  for (const ShotRecord& rec : records) {
    const cxmat& v = bases.at(rec.basis_index);
    std::vector<cxmat> proj = basis_projectors(v);
    for (size_t i = 0; i < proj.size(); ++i) {
      projectors.push_back(std::move(proj[i]));
      counts.push_back(static_cast<double>(rec.counts[i]));
    }
    total += static_cast<double>(rec.shots);
  }
  if (total < static_cast<double>(dim) * dim)
    throw std::invalid_argument("mle_estimate: too few shots for the dimension");
  Eigen::VectorXd c =
      Eigen::Map<Eigen::VectorXd>(counts.data(), counts.size());
  return mle_core(dim, projectors, c, total, init_seed, truth);
}

StateEstimate mle_estimate_exact(const DensityMatrix& rho,
                                 const std::vector<cxmat>& bases,
                                 std::uint64_t init_seed) {
  const int dim = rho.dim();
  std::vector<cxmat> projectors;
  std::vector<double> counts;
  double total = 0;
  for (const cxmat& v : bases) {
    for (int i = 0; i < dim; ++i) {
      cxmat f = v.col(i) * v.col(i).adjoint();
      double p = (rho.matrix() * f).trace().real();
      projectors.push_back(std::move(f));
      counts.push_back(std::max(0.0, p));
      total += std::max(0.0, p);
    }
  }
  Eigen::VectorXd c =
      Eigen::Map<Eigen::VectorXd>(counts.data(), counts.size());
  return mle_core(dim, projectors, c, total, init_seed, rho.matrix());
}

}  // namespace qpareto
