#include "qpareto/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace qpareto {

namespace {

cxmat conjugated_state(const cxmat& u, const DensityMatrix& rho0) {
  return u * rho0.matrix() * u.adjoint();
}

// sum_k alpha_k [Theta_k, U rho0 U^dag]; the flow velocity is this times U.
cxmat flow_generator(const DensityMatrix& rho0,
                     const std::vector<Observable>& observables,
                     const Eigen::VectorXd& weights, const cxmat& u) {
  cxmat rho = conjugated_state(u, rho0);
  cxmat g = cxmat::Zero(u.rows(), u.cols());
  for (size_t k = 0; k < observables.size(); ++k) {
    const cxmat& th = observables[k].matrix();
    g += weights[k] * (th * rho - rho * th);
  }
  return g;
}

double weighted_objective(const DensityMatrix& rho0,
                          const std::vector<Observable>& observables,
                          const Eigen::VectorXd& weights, const cxmat& u) {
  cxmat rho = conjugated_state(u, rho0);
  double phi = 0;
  for (size_t k = 0; k < observables.size(); ++k)
    phi += weights[k] * (rho * observables[k].matrix()).trace().real();
  return phi;
}

}  // namespace

KinematicFlowResult kinematic_flow(const DensityMatrix& rho0,
                                   const std::vector<Observable>& observables,
                                   const Eigen::VectorXd& weights,
                                   const cxmat& u_init, int steps,
                                   double step_size, double gradient_tol) {
  if (weights.size() != static_cast<Eigen::Index>(observables.size()))
    throw std::invalid_argument("kinematic_flow: weights/observables mismatch");
  if (weights.minCoeff() <= 0)
    throw std::invalid_argument("kinematic_flow: weights must be positive");
  require_unitary(u_init, "kinematic_flow U_init");

  KinematicFlowResult res;
  res.u = u_init;
  double phi = weighted_objective(rho0, observables, weights, res.u);
  res.objective.push_back(phi);
  double gamma = step_size;

  for (int it = 0; it < steps; ++it) {
    cxmat g = flow_generator(rho0, observables, weights, res.u);
    res.gradient_norm = g.norm();
    if (res.gradient_norm < gradient_tol) {
      res.converged = true;
      break;
    }
    // Ascend; halve the step until the objective does not decrease.
    while (true) {
      cxmat trial = polar_unitary(res.u + gamma * g * res.u);
      double trial_phi = weighted_objective(rho0, observables, weights, trial);
      if (trial_phi >= phi - 1e-13 * std::max(1.0, std::abs(phi))) {
        res.u = std::move(trial);
        phi = trial_phi;
        gamma = std::min(gamma * 1.2, step_size);
        break;
      }
      gamma *= 0.5;
      if (gamma < 1e-14)
        throw std::runtime_error("kinematic_flow: step size underflow");
    }
    res.objective.push_back(phi);
    res.steps_taken = it + 1;
  }
  cxmat g = flow_generator(rho0, observables, weights, res.u);
  res.gradient_norm = g.norm();
  res.converged = res.gradient_norm < gradient_tol;
  res.expectations.resize(observables.size());
  cxmat rho = conjugated_state(res.u, rho0);
  for (size_t k = 0; k < observables.size(); ++k)
    res.expectations[k] = (rho * observables[k].matrix()).trace().real();
  return res;
}

std::pair<double, double> matching_extrema(const DensityMatrix& rho0,
                                           const Observable& theta) {
  const Eigen::VectorXd& lam = rho0.spectrum().values;   // ascending
  const Eigen::VectorXd& gam = theta.spectrum().values;  // ascending
  const Eigen::Index n = lam.size();
  double lo = 0, hi = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    hi += lam[j] * gam[j];
    lo += lam[j] * gam[n - 1 - j];
  }
  return {lo, hi};
}

// ---------------------------------------------------------------------------

namespace {

Eigen::VectorXd kinematic_expectations(const DensityMatrix& rho0,
                                       const std::vector<Observable>& obs,
                                       const cxmat& u) {
  cxmat rho = conjugated_state(u, rho0);
  Eigen::VectorXd out(obs.size());
  for (size_t k = 0; k < obs.size(); ++k)
    out[k] = (rho * obs[k].matrix()).trace().real();
  return out;
}

struct MaxEntFit {
  DensityMatrix state;
  Eigen::VectorXd lambdas;
  bool converged;
};

// rho = exp(sum lambda_k Theta_k)/Z matching Tr(rho Theta_k) = chi_k:
// minimize the convex dual log Z(lambda) - lambda . chi.
MaxEntFit fit_max_ent(const std::vector<Observable>& obs,
                      const Eigen::VectorXd& chi) {
  const int m = static_cast<int>(obs.size());
  const Eigen::Index n = obs[0].matrix().rows();
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);

  auto state_of = [&](const Eigen::VectorXd& l) {
    cxmat h = cxmat::Zero(n, n);
    for (int k = 0; k < m; ++k) h += l[k] * obs[k].matrix();
    Eigen::SelfAdjointEigenSolver<cxmat> es(h);
    Eigen::VectorXd e = es.eigenvalues().array() - es.eigenvalues().maxCoeff();
    Eigen::VectorXd w = e.array().exp();
    w /= w.sum();
    return cxmat(es.eigenvectors() * w.asDiagonal() *
                 es.eigenvectors().adjoint());
  };
  auto dual = [&](const Eigen::VectorXd& l) {
    cxmat h = cxmat::Zero(n, n);
    for (int k = 0; k < m; ++k) h += l[k] * obs[k].matrix();
    Eigen::SelfAdjointEigenSolver<cxmat> es(h);
    double emax = es.eigenvalues().maxCoeff();
    double z = (es.eigenvalues().array() - emax).exp().sum();
    return emax + std::log(z) - l.dot(chi);
  };

  double f = dual(lambda);
  double step = 1.0;
  bool converged = false;
  for (int it = 0; it < 50000; ++it) {
    cxmat rho = state_of(lambda);
    Eigen::VectorXd grad(m);
    for (int k = 0; k < m; ++k)
      grad[k] = (rho * obs[k].matrix()).trace().real() - chi[k];
    if (grad.norm() < 1e-8) {
      converged = true;
      break;
    }
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      Eigen::VectorXd trial = lambda - step * grad;
      double ft = dual(trial);
      if (ft < f) {
        lambda = std::move(trial);
        f = ft;
        step *= 1.5;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      // The dual value has hit floating-point resolution; accept if the
      // moment-matching residual is already small.
      converged = grad.norm() < 1e-6;
      break;
    }
  }
  return {DensityMatrix(state_of(lambda)), lambda, converged};
}

}  // namespace

FeasibleTargetResult feasible_target_solver(
    const DensityMatrix& rho0, const std::vector<Observable>& observables,
    const Eigen::VectorXd& targets, std::uint64_t seed, int restarts,
    int max_iterations) {
  const int m = static_cast<int>(observables.size());
  const int dim = static_cast<int>(rho0.matrix().rows());
  if (targets.size() != m)
    throw std::invalid_argument("feasible_target_solver: target count mismatch");

  FeasibleTargetResult out;
  const int rank = rho0.rank();
  out.overdetermined = m > 2 * dim * rank - rank * rank;
  out.entropy = von_neumann_entropy(rho0).shannon;

  auto cost = [&](const cxmat& u) {
    return (kinematic_expectations(rho0, observables, u) - targets)
        .squaredNorm();
  };

  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    cxmat u = (r == 0) ? cxmat(cxmat::Identity(dim, dim))
                       : random_unitary(dim, seed + r);
    double j = cost(u);
    double gamma = 0.1;
    for (int it = 0; it < max_iterations && j > 1e-16; ++it) {
      Eigen::VectorXd phi = kinematic_expectations(rho0, observables, u);
      cxmat rho = conjugated_state(u, rho0);
      cxmat g = cxmat::Zero(dim, dim);
      for (int k = 0; k < m; ++k) {
        const cxmat& th = observables[k].matrix();
        g += 2.0 * (phi[k] - targets[k]) * (th * rho - rho * th);
      }
      if (g.norm() < 1e-12) break;
      bool moved = false;
      for (int bt = 0; bt < 50; ++bt) {
        cxmat trial = polar_unitary(u - gamma * g * u);
        double jt = cost(trial);
        if (jt < j) {
          u = std::move(trial);
          j = jt;
          gamma *= 1.3;
          moved = true;
          break;
        }
        gamma *= 0.5;
      }
      if (!moved) break;
    }
    if (j < best) {
      best = j;
      out.u = u;
    }
    if (best < 1e-16) break;
  }
  out.residual = std::sqrt(best);
  out.found = out.residual < 1e-6;
  out.achieved = kinematic_expectations(rho0, observables, out.u);

  MaxEntFit fit = fit_max_ent(observables, targets);
  out.surrogate = std::move(fit.state);
  out.surrogate_lambdas = std::move(fit.lambdas);
  out.surrogate_converged = fit.converged;
  return out;
}

// ---------------------------------------------------------------------------
// Permutation-class combinatorics

namespace {

Eigen::MatrixXi signature_table(const std::vector<int>& rho_block,
                                const std::vector<int>& slot_block, int r,
                                int s, const std::vector<int>& perm) {
  Eigen::MatrixXi v = Eigen::MatrixXi::Zero(r, s);
  for (size_t j = 0; j < perm.size(); ++j)
    v(rho_block[j], slot_block[perm[j]]) += 1;
  return v;
}

std::vector<int> table_key(const Eigen::MatrixXi& v) {
  return std::vector<int>(v.data(), v.data() + v.size());
}

constexpr int kMaxEnumerationDim = 8;

}  // namespace

int PermutationClassPartition::class_of(
    const std::vector<int>& permutation) const {
  for (size_t c = 0; c < classes.size(); ++c)
    for (const std::vector<int>& p : classes[c])
      if (p == permutation) return static_cast<int>(c);
  throw std::invalid_argument("class_of: not a valid permutation");
}

PermutationClassPartition partition_permutations(const DensityMatrix& rho0,
                                                 const Observable& theta) {
  const int n = static_cast<int>(rho0.matrix().rows());
  if (n > kMaxEnumerationDim)
    throw std::invalid_argument(
        "partition_permutations: dimension too large for N! enumeration");

  const Spectrum& rs = rho0.spectrum();
  const Spectrum& ts = theta.spectrum();
  std::vector<int> rho_block = rs.block_of_position();
  std::vector<int> slot_block = ts.block_of_position();
  const int r = static_cast<int>(rs.multiplicities.size());
  const int s = static_cast<int>(ts.multiplicities.size());

  PermutationClassPartition part;
  part.n = n;
  std::map<std::vector<int>, int> index_of;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    Eigen::MatrixXi v = signature_table(rho_block, slot_block, r, s, perm);
    std::vector<int> key = table_key(v);
    auto [it, inserted] = index_of.try_emplace(key, part.classes.size());
    if (inserted) {
      part.classes.emplace_back();
      ContingencyTable table;
      table.rows.assign(rs.multiplicities.begin(), rs.multiplicities.end());
      table.cols.assign(ts.multiplicities.begin(), ts.multiplicities.end());
      table.entries = v;
      double value = 0;
      for (int x = 0; x < r; ++x)
        for (int y = 0; y < s; ++y)
          value += v(x, y) * rs.distinct[x] * ts.distinct[y];
      part.critical_values.push_back(value);
      part.dimensions.push_back(
          critical_dimension(table.rows, table.cols, table));
      part.tables.push_back(std::move(table));
    }
    part.classes[it->second].push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::iota(perm.begin(), perm.end(), 0);
  Eigen::MatrixXi vmax = signature_table(rho_block, slot_block, r, s, perm);
  part.class_of_max = index_of.at(table_key(vmax));
  return part;
}

int critical_dimension(const std::vector<int>& rho_multiplicities,
                       const std::vector<int>& theta_multiplicities,
                       const ContingencyTable& table) {
  const int r = static_cast<int>(rho_multiplicities.size());
  const int s = static_cast<int>(theta_multiplicities.size());
  if (table.entries.rows() != r || table.entries.cols() != s)
    throw std::invalid_argument("critical_dimension: table shape mismatch");
  int dim = 0;
  for (int x = 0; x < r; ++x) {
    int row_sum = 0;
    for (int y = 0; y < s; ++y) {
      if (table.entries(x, y) < 0)
        throw std::invalid_argument("critical_dimension: negative entry");
      row_sum += table.entries(x, y);
      dim -= table.entries(x, y) * table.entries(x, y);
    }
    if (row_sum != rho_multiplicities[x])
      throw std::invalid_argument("critical_dimension: row sum mismatch");
    dim += rho_multiplicities[x] * rho_multiplicities[x];
  }
  for (int y = 0; y < s; ++y) {
    int col_sum = 0;
    for (int x = 0; x < r; ++x) col_sum += table.entries(x, y);
    if (col_sum != theta_multiplicities[y])
      throw std::invalid_argument("critical_dimension: column sum mismatch");
    dim += theta_multiplicities[y] * theta_multiplicities[y];
  }
  return dim;
}

namespace {

// Map each diagonal value to its block index in an ascending distinct list.
std::vector<int> value_block_indices(const Eigen::VectorXd& diag,
                                     const std::vector<double>& distinct) {
  std::vector<int> out(diag.size(), -1);
  double scale = 1.0;
  for (double v : distinct) scale = std::max(scale, std::abs(v));
  for (Eigen::Index j = 0; j < diag.size(); ++j) {
    for (size_t b = 0; b < distinct.size(); ++b)
      if (std::abs(diag[j] - distinct[b]) < 1e-7 * scale) {
        out[j] = static_cast<int>(b);
        break;
      }
    if (out[j] < 0)
      throw std::logic_error("value_block_indices: unmatched eigenvalue");
  }
  return out;
}

}  // namespace

cxmat simultaneous_eigenbasis(const std::vector<cxmat>& matrices, double tol) {
  if (matrices.empty())
    throw std::invalid_argument("simultaneous_eigenbasis: empty family");
  const Eigen::Index n = matrices[0].rows();
  for (size_t a = 0; a < matrices.size(); ++a) {
    require_hermitian(matrices[a], "simultaneous_eigenbasis");
    for (size_t b = a + 1; b < matrices.size(); ++b)
      if (max_abs(matrices[a] * matrices[b] - matrices[b] * matrices[a]) > tol)
        throw std::invalid_argument(
            "simultaneous_eigenbasis: matrices do not commute");
  }

  cxmat w = cxmat::Identity(n, n);
  std::vector<std::pair<int, int>> blocks{{0, static_cast<int>(n)}};
  for (const cxmat& mat : matrices) {
    std::vector<std::pair<int, int>> refined;
    const double scale = std::max(1.0, max_abs(mat));
    for (auto [start, size] : blocks) {
      cxmat sub = w.middleCols(start, size).adjoint() * mat *
                  w.middleCols(start, size);
      Eigen::SelfAdjointEigenSolver<cxmat> es((sub + sub.adjoint()) / 2.0);
      w.middleCols(start, size) =
          (w.middleCols(start, size) * es.eigenvectors()).eval();
      const Eigen::VectorXd& e = es.eigenvalues();  // ascending
      int run = 0;
      for (int j = 1; j <= size; ++j) {
        if (j == size || e[j] - e[run] > 1e-8 * scale) {
          refined.emplace_back(start + run, j - run);
          run = j;
        }
      }
    }
    blocks = std::move(refined);
  }
  return w;
}

IntersectionBounds intersection_bounds(const DensityMatrix& rho0,
                                       const Observable& theta_a,
                                       const Observable& theta_b, int class_i,
                                       int class_j) {
  PermutationClassPartition pa = partition_permutations(rho0, theta_a);
  PermutationClassPartition pb = partition_permutations(rho0, theta_b);
  if (class_i < 0 || class_i >= static_cast<int>(pa.classes.size()) ||
      class_j < 0 || class_j >= static_cast<int>(pb.classes.size()))
    throw std::out_of_range("intersection_bounds: class index out of range");

  IntersectionBounds out;
  out.upper = std::min(pa.dimensions[class_i], pb.dimensions[class_j]);
  out.commuting = max_abs(theta_a.matrix() * theta_b.matrix() -
                          theta_b.matrix() * theta_a.matrix()) < 1e-10;
  if (!out.commuting) return out;

  const int n = pa.n;
  cxmat w = simultaneous_eigenbasis({theta_a.matrix(), theta_b.matrix()});
  Eigen::VectorXd da(n), db(n);
  for (int j = 0; j < n; ++j) {
    da[j] = (w.col(j).adjoint() * theta_a.matrix() * w.col(j)).value().real();
    db[j] = (w.col(j).adjoint() * theta_b.matrix() * w.col(j)).value().real();
  }
  std::vector<int> a_block = value_block_indices(da, theta_a.spectrum().distinct);
  std::vector<int> b_block = value_block_indices(db, theta_b.spectrum().distinct);
  std::vector<int> rho_block = rho0.spectrum().block_of_position();
  const int r = static_cast<int>(rho0.spectrum().multiplicities.size());
  const int sa = static_cast<int>(theta_a.spectrum().multiplicities.size());
  const int sb = static_cast<int>(theta_b.spectrum().multiplicities.size());

  // Joint eigenvalue pattern of the commuting pair (arrangement-independent).
  Eigen::MatrixXi p = Eigen::MatrixXi::Zero(sa, sb);
  for (int j = 0; j < n; ++j) p(a_block[j], b_block[j]) += 1;
  int p2 = p.array().square().sum();
  int n2 = 0;
  for (int x = 0; x < r; ++x) {
    int nx = rho0.spectrum().multiplicities[x];
    n2 += nx * nx;
  }

  const std::vector<int> key_a = table_key(pa.tables[class_i].entries);
  const std::vector<int> key_b = table_key(pb.tables[class_j].entries);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    if (table_key(signature_table(rho_block, a_block, r, sa, perm)) != key_a)
      continue;
    if (table_key(signature_table(rho_block, b_block, r, sb, perm)) != key_b)
      continue;
    // q_xyz: rho-block x meeting the (theta_a y, theta_b z) value pair.
    std::vector<int> q(r * sa * sb, 0);
    for (int j = 0; j < n; ++j)
      q[(rho_block[j] * sa + a_block[perm[j]]) * sb + b_block[perm[j]]] += 1;
    int q2 = 0;
    for (int v : q) q2 += v * v;
    int lower = n2 + p2 - q2;
    if (!out.has_common_permutation || lower > out.lower) out.lower = lower;
    out.has_common_permutation = true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

Lemma1Report lemma1_check(const DensityMatrix& rho0,
                          const std::vector<Observable>& observables,
                          const Eigen::VectorXd& weights) {
  const int m = static_cast<int>(observables.size());
  if (weights.size() != m)
    throw std::invalid_argument("lemma1_check: weights/observables mismatch");
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b)
      if (max_abs(observables[a].matrix() * observables[b].matrix() -
                  observables[b].matrix() * observables[a].matrix()) > 1e-10)
        throw std::invalid_argument("lemma1_check: observables do not commute");

  const int n = static_cast<int>(rho0.matrix().rows());
  cxmat theta_m = cxmat::Zero(n, n);
  std::vector<cxmat> family;
  for (int k = 0; k < m; ++k) {
    theta_m += weights[k] * observables[k].matrix();
    family.push_back(observables[k].matrix());
  }
  Observable obs_m(theta_m);
  family.push_back(theta_m);
  cxmat w = simultaneous_eigenbasis(family);

  std::vector<std::vector<int>> blocks(m);  // per-k block index of each slot
  std::vector<int> sdim(m);
  for (int k = 0; k < m; ++k) {
    Eigen::VectorXd d(n);
    for (int j = 0; j < n; ++j)
      d[j] = (w.col(j).adjoint() * observables[k].matrix() * w.col(j))
                 .value()
                 .real();
    blocks[k] = value_block_indices(d, observables[k].spectrum().distinct);
    sdim[k] = static_cast<int>(observables[k].spectrum().multiplicities.size());
  }
  Eigen::VectorXd dm(n);
  for (int j = 0; j < n; ++j)
    dm[j] = (w.col(j).adjoint() * theta_m * w.col(j)).value().real();
  std::vector<int> m_block = value_block_indices(dm, obs_m.spectrum().distinct);
  const int sm = static_cast<int>(obs_m.spectrum().multiplicities.size());

  std::vector<int> rho_block = rho0.spectrum().block_of_position();
  const int r = static_cast<int>(rho0.spectrum().multiplicities.size());

  std::vector<std::vector<int>> max_keys(m);
  for (int k = 0; k < m; ++k) {
    PermutationClassPartition pk = partition_permutations(rho0, observables[k]);
    max_keys[k] = table_key(pk.tables[pk.class_of_max].entries);
  }
  PermutationClassPartition pm = partition_permutations(rho0, obs_m);
  std::vector<int> m_key = table_key(pm.tables[pm.class_of_max].entries);

  std::vector<bool> intersect_nonempty(m, false);
  std::vector<bool> dmax_subset(m, true);  // D_M^max subset of D_k^max
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool in_m =
        table_key(signature_table(rho_block, m_block, r, sm, perm)) == m_key;
    if (!in_m) continue;
    for (int k = 0; k < m; ++k) {
      bool in_k = table_key(signature_table(rho_block, blocks[k], r, sdim[k],
                                            perm)) == max_keys[k];
      if (in_k)
        intersect_nonempty[k] = true;
      else
        dmax_subset[k] = false;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  Lemma1Report report;
  report.may_converge_strong = true;
  for (int k = 0; k < m; ++k) {
    // Column-nesting: each Theta_M eigenvalue block inside one Theta_k block.
    Eigen::MatrixXi p = Eigen::MatrixXi::Zero(sdim[k], sm);
    for (int j = 0; j < n; ++j) p(blocks[k][j], m_block[j]) += 1;
    bool nested = true;
    for (int y = 0; y < sm; ++y) {
      int nonzero = 0;
      for (int x = 0; x < sdim[k]; ++x)
        if (p(x, y) > 0) ++nonzero;
      if (nonzero != 1) nested = false;
    }
    ParetoVerdict v = ParetoVerdict::kNone;
    if (intersect_nonempty[k]) v = ParetoVerdict::kMayConvergeWeak;
    if (nested && dmax_subset[k] && intersect_nonempty[k])
      v = ParetoVerdict::kGuaranteedWeak;
    report.verdicts.push_back(v);
    if (!intersect_nonempty[k]) report.may_converge_strong = false;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Linear feasibility (small dense phase-1 simplex)

namespace {

// Find x >= 0 with A x = b, via phase-1 simplex with Bland's rule.
std::optional<Eigen::VectorXd> phase1_feasible(Eigen::MatrixXd a,
                                               Eigen::VectorXd b) {
  const int rows = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  for (int i = 0; i < rows; ++i)
    if (b[i] < 0) {
      a.row(i) = -a.row(i);
      b[i] = -b[i];
    }
  // Tableau [A | I | b]; minimize the sum of the artificial variables.
  Eigen::MatrixXd t(rows, n + rows + 1);
  t.leftCols(n) = a;
  t.middleCols(n, rows) = Eigen::MatrixXd::Identity(rows, rows);
  t.col(n + rows) = b;
  Eigen::RowVectorXd cost = Eigen::RowVectorXd::Zero(n + rows + 1);
  for (int i = 0; i < rows; ++i) cost -= t.row(i);  // reduced costs
  std::vector<int> basis(rows);
  for (int i = 0; i < rows; ++i) basis[i] = n + i;

  const int max_pivots = 50 * (rows + n) + 1000;
  for (int pivot = 0; pivot < max_pivots; ++pivot) {
    int enter = -1;
    for (int j = 0; j < n + rows; ++j)
      if (cost[j] < -1e-9) {
        enter = j;
        break;
      }
    if (enter < 0) break;
    int leave = -1;
    double best_ratio = 0;
    for (int i = 0; i < rows; ++i) {
      if (t(i, enter) <= 1e-11) continue;
      double ratio = t(i, n + rows) / t(i, enter);
      if (leave < 0 || ratio < best_ratio - 1e-12 ||
          (std::abs(ratio - best_ratio) <= 1e-12 && basis[i] < basis[leave])) {
        leave = i;
        best_ratio = ratio;
      }
    }
    if (leave < 0) return std::nullopt;  // unbounded: cannot happen in phase 1
    t.row(leave) /= t(leave, enter);
    for (int i = 0; i < rows; ++i)
      if (i != leave && std::abs(t(i, enter)) > 1e-14)
        t.row(i) -= t(i, enter) * t.row(leave);
    cost -= cost[enter] * t.row(leave);
    basis[leave] = enter;
  }
  double objective = 0;
  for (int i = 0; i < rows; ++i)
    if (basis[i] >= n) objective += t(i, n + rows);
  if (objective > 1e-8) return std::nullopt;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < rows; ++i)
    if (basis[i] < n) x[basis[i]] = t(i, n + rows);
  return x;
}

}  // namespace

WeightSolution weight_solver(const DensityMatrix& rho0,
                             const std::vector<Observable>& observables,
                             const std::vector<int>& requested_classes) {
  const int m = static_cast<int>(observables.size());
  const int n = static_cast<int>(rho0.matrix().rows());
  if (n > 6)
    throw std::invalid_argument("weight_solver: dimension too large (N <= 6)");
  if (static_cast<int>(requested_classes.size()) != m)
    throw std::invalid_argument("weight_solver: class count mismatch");
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b)
      if (max_abs(observables[a].matrix() * observables[b].matrix() -
                  observables[b].matrix() * observables[a].matrix()) > 1e-10)
        throw std::invalid_argument("weight_solver: observables do not commute");

  std::vector<cxmat> family;
  for (const Observable& o : observables) family.push_back(o.matrix());
  cxmat w = simultaneous_eigenbasis(family);

  std::vector<std::vector<int>> blocks(m);
  std::vector<Eigen::VectorXd> diag(m);
  std::vector<int> sdim(m);
  std::vector<std::vector<int>> req_keys(m);
  for (int k = 0; k < m; ++k) {
    diag[k].resize(n);
    for (int j = 0; j < n; ++j)
      diag[k][j] = (w.col(j).adjoint() * observables[k].matrix() * w.col(j))
                       .value()
                       .real();
    blocks[k] = value_block_indices(diag[k], observables[k].spectrum().distinct);
    sdim[k] = static_cast<int>(observables[k].spectrum().multiplicities.size());
    PermutationClassPartition pk = partition_permutations(rho0, observables[k]);
    if (requested_classes[k] < 0 ||
        requested_classes[k] >= static_cast<int>(pk.classes.size()))
      throw std::out_of_range("weight_solver: class index out of range");
    req_keys[k] = table_key(pk.tables[requested_classes[k]].entries);
  }
  std::vector<int> rho_block = rho0.spectrum().block_of_position();
  const Eigen::VectorXd& lam = rho0.spectrum().values;
  const int r = static_cast<int>(rho0.spectrum().multiplicities.size());

  std::vector<std::vector<int>> all_perms;
  std::vector<std::vector<int>> members;  // indices into all_perms
  {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      bool in_all = true;
      for (int k = 0; k < m && in_all; ++k)
        in_all = table_key(signature_table(rho_block, blocks[k], r, sdim[k],
                                           perm)) == req_keys[k];
      if (in_all) members.push_back(perm);
      all_perms.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  WeightSolution sol;
  if (members.empty()) {
    sol.diagnostic = "requested classes have an empty arrangement intersection";
    return sol;
  }

  constexpr double kFloor = 1e-6;
  for (const std::vector<int>& pi : members) {
    // Dominance of pi: sum_k alpha_k sum_j lam_j (d_k(pi(j)) - d_k(pi'(j))) >= 0.
    std::map<std::vector<long long>, Eigen::VectorXd> rows;
    for (const std::vector<int>& other : all_perms) {
      if (other == pi) continue;
      Eigen::VectorXd c(m);
      for (int k = 0; k < m; ++k) {
        double acc = 0;
        for (int j = 0; j < n; ++j)
          acc += lam[j] * (diag[k][pi[j]] - diag[k][other[j]]);
        c[k] = acc;
      }
      if (c.cwiseAbs().maxCoeff() < 1e-12) continue;
      std::vector<long long> key(m);
      for (int k = 0; k < m; ++k) key[k] = std::llround(c[k] * 1e10);
      rows.try_emplace(std::move(key), std::move(c));
    }
    // Variables beta = alpha - floor >= 0, slacks for each inequality, plus
    // the normalization equality sum beta = 1 - m*floor. Prefer weights that
    // dominate with a strict margin so the requested arrangement is the
    // unique maximizer; fall back to weak dominance if that is infeasible.
    const int kk = static_cast<int>(rows.size());
    std::optional<Eigen::VectorXd> x;
    for (double margin : {1e-4, 0.0}) {
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(kk + 1, m + kk);
      Eigen::VectorXd b(kk + 1);
      int i = 0;
      for (const auto& [key, c] : rows) {
        a.row(i).head(m) = c.transpose();
        a(i, m + i) = -1.0;  // surplus
        b[i] = margin * c.norm() - kFloor * c.sum();
        ++i;
      }
      a.row(kk).head(m).setOnes();
      b[kk] = 1.0 - m * kFloor;
      x = phase1_feasible(a, b);
      if (x) break;
    }
    if (!x) continue;
    sol.feasible = true;
    sol.alpha = x->head(m).array() + kFloor;
    sol.alpha /= sol.alpha.sum();
    sol.arrangement = pi;
    return sol;
  }
  sol.diagnostic = "no arrangement in the intersection admits feasible weights";
  return sol;
}

}  // namespace qpareto
