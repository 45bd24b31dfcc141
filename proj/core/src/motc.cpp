#include "qpareto/motc.hpp"

#include <algorithm>
#include <cmath>

namespace qpareto {

double TrackResult::max_error() const {
  return *std::max_element(tracking_error.begin(), tracking_error.end());
}

Gramian build_gramian(const GradientVector& gradients) {
  Gramian g;
  const double dt = gradients.grid.dt();
  g.matrix = gradients.samples * gradients.samples.transpose() * dt;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.matrix);
  g.eigvecs_ = es.eigenvectors();
  g.eigvals_ = es.eigenvalues().cwiseMax(0.0);
  g.singular_values = g.eigvals_.reverse();
  const double smax = g.singular_values[0];
  const double smin = g.singular_values[g.singular_values.size() - 1];
  g.condition_number = smax / std::max(smin, smax * 1e-300);
  if (smax == 0.0) g.condition_number = 1.0;
  g.truncated = g.condition_number > Gramian::kConditionLimit;
  return g;
}

Eigen::VectorXd Gramian::solve(const Eigen::VectorXd& rhs, bool force_exact) const {
  if (force_exact && condition_number > kConditionLimit)
    throw std::runtime_error(
        "Gramian: condition number above 1e9 with exact inversion requested");
  const double smax = singular_values[0];
  Eigen::VectorXd y = eigvecs_.transpose() * rhs;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double lam = eigvals_[i];
    if (truncated && lam < smax * kTruncationRatio)
      y[i] = 0.0;  // discard singular directions
    else
      y[i] /= lam;
  }
  return eigvecs_ * y;
}

TrackState evaluate_track_state(const QuantumSystem& system,
                                const DensityMatrix& rho0,
                                const std::vector<Observable>& observables,
                                const ControlField& field) {
  TrackState st{field, propagate(system, field), {}, {}, {}};
  st.gradients =
      functional_gradient(system, field, rho0, observables, st.path);
  st.expectations = expectations(st.path.final_unitary(), rho0, observables);
  st.gramian = build_gramian(st.gradients);
  return st;
}

namespace {

Eigen::VectorXd free_function_samples(
    FreeFunction kind, double eta,
    const std::function<double(double)>& weight,
    const std::function<Eigen::VectorXd(double, const ControlField&)>& custom,
    double s, const ControlField& field) {
  const int m = field.grid().steps;
  switch (kind) {
    case FreeFunction::kZero:
      return Eigen::VectorXd::Zero(m);
    case FreeFunction::kFluenceMinimizing: {
      Eigen::VectorXd f(m);
      for (int j = 0; j < m; ++j) {
        double sw = weight ? weight(field.grid().time(j)) : 1.0;
        f[j] = -field.value(j) / (eta * sw);
      }
      return f;
    }
    case FreeFunction::kCustom:
      return custom(s, field);
  }
  throw std::logic_error("unreachable");
}

}  // namespace

Eigen::VectorXd motc_step(const TrackState& state, const TrackPlan& plan,
                          double s) {
  const double dt = state.gradients.grid.dt();
  Eigen::VectorXd f = free_function_samples(
      plan.free_function, plan.eta, plan.fluence_weight, plan.custom_free, s,
      state.field);
  Eigen::VectorXd w = plan.targets.value(s);
  Eigen::VectorXd dwds = plan.targets.derivative(s);
  Eigen::VectorXd correction =
      plan.error_correction_beta * (w - state.expectations);
  Eigen::VectorXd rhs =
      correction + dwds - (state.gradients.samples * f) * dt;
  Eigen::VectorXd coeff = state.gramian.solve(rhs, plan.force_exact_gramian);
  return f + state.gradients.samples.transpose() * coeff;
}

TrackResult run_track(const QuantumSystem& system, const DensityMatrix& rho0,
                      const std::vector<Observable>& observables,
                      const ControlField& initial_field,
                      const TrackPlan& plan_in) {
  TrackResult res;
  TrackState state =
      evaluate_track_state(system, rho0, observables, initial_field);
  TrackPlan plan = plan_in;
  // Launch check: when the initial field is not on the track, pull the
  // expectations in with the corrective term instead of failing.
  double mismatch =
      (state.expectations - plan.targets.value(0.0)).cwiseAbs().maxCoeff();
  if (mismatch > 1e-3 && plan.error_correction_beta == 0.0) {
    plan.error_correction_beta = 10.0;
    res.diagnostic = "initial expectations off-track; corrective ramp-in enabled";
  }
  const double ds = 1.0 / plan.s_steps;
  const double span =
      std::max(1e-3, (plan.targets.value(1.0) - plan.targets.value(0.0)).norm());

  auto record = [&](double s) {
    Eigen::VectorXd w = plan.targets.value(s);
    res.s.push_back(s);
    res.targets.push_back(w);
    res.expectations.push_back(state.expectations);
    res.tracking_error.push_back((state.expectations - w).norm());
    res.condition_numbers.push_back(state.gramian.condition_number);
    res.fluence.push_back(fluence(state.field));
  };
  record(0.0);
  res.field_snapshots.push_back(state.field.values());

  for (int k = 0; k < plan.s_steps; ++k) {
    const double s = k * ds;
    Eigen::VectorXd next;
    if (plan.integrator == Integrator::kEuler) {
      next = state.field.values() + ds * motc_step(state, plan, s);
    } else {
      Eigen::VectorXd k1 = motc_step(state, plan, s);
      TrackState s2 = evaluate_track_state(
          system, rho0, observables,
          state.field.with_values(state.field.values() + 0.5 * ds * k1));
      Eigen::VectorXd k2 = motc_step(s2, plan, s + 0.5 * ds);
      TrackState s3 = evaluate_track_state(
          system, rho0, observables,
          state.field.with_values(state.field.values() + 0.5 * ds * k2));
      Eigen::VectorXd k3 = motc_step(s3, plan, s + 0.5 * ds);
      TrackState s4 = evaluate_track_state(
          system, rho0, observables,
          state.field.with_values(state.field.values() + ds * k3));
      Eigen::VectorXd k4 = motc_step(s4, plan, s + ds);
      next = state.field.values() + ds / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    state = evaluate_track_state(system, rho0, observables,
                                 state.field.with_values(std::move(next)));
    record((k + 1) * ds);
    if (k == plan.s_steps / 2) res.field_snapshots.push_back(state.field.values());
    if (res.tracking_error.back() > 10.0 * span) {
      res.diverged = true;
      res.diagnostic = "tracking error exceeded 10x the initial target span at s=" +
                       std::to_string((k + 1) * ds);
      break;
    }
  }
  res.field_snapshots.push_back(state.field.values());
  res.final_field = state.field;
  return res;
}

TrackResult level_set_excursion(const QuantumSystem& system,
                                const DensityMatrix& rho0,
                                const std::vector<Observable>& observables,
                                const ControlField& field_on_front,
                                const LevelSetPolicy& policy, int s_steps) {
  TrackState state =
      evaluate_track_state(system, rho0, observables, field_on_front);
  const Eigen::VectorXd chi = state.expectations;
  const bool fluence_policy =
      policy.free_function == FreeFunction::kFluenceMinimizing;

  TrackPlan plan;
  plan.targets.value = [chi](double) { return chi; };
  plan.targets.derivative = [chi](double) {
    return Eigen::VectorXd::Zero(chi.size()).eval();
  };
  plan.free_function = policy.free_function;
  plan.eta = policy.eta;
  plan.fluence_weight = policy.fluence_weight;
  plan.custom_free = policy.custom_free;
  plan.error_correction_beta = 0.0;

  TrackResult res;
  const double ds = 1.0 / s_steps;
  auto record = [&](double s) {
    res.s.push_back(s);
    res.targets.push_back(chi);
    res.expectations.push_back(state.expectations);
    res.tracking_error.push_back((state.expectations - chi).norm());
    res.condition_numbers.push_back(state.gramian.condition_number);
    res.fluence.push_back(fluence(state.field));
  };
  record(0.0);
  res.field_snapshots.push_back(state.field.values());

  for (int k = 0; k < s_steps; ++k) {
    const double s = k * ds;
    double local_ds = ds;
    bool accepted = false;
    bool with_beta = false;
    for (int attempt = 0; attempt < 10 && !accepted; ++attempt) {
      plan.error_correction_beta = with_beta ? policy.correction_beta : 0.0;
      Eigen::VectorXd incr = motc_step(state, plan, s);
      TrackState cand = evaluate_track_state(
          system, rho0, observables,
          state.field.with_values(state.field.values() + local_ds * incr));
      double drift = (cand.expectations - chi).cwiseAbs().maxCoeff();
      bool fluence_ok =
          !fluence_policy ||
          fluence(cand.field) <= res.fluence.back() * (1.0 + 1e-12);
      if (drift <= policy.drift_abort && fluence_ok) {
        state = std::move(cand);
        accepted = true;
      } else if (policy.correction_beta > 0.0 && !with_beta) {
        with_beta = true;  // retry once with the corrective pull-back
      } else {
        local_ds *= 0.5;
      }
    }
    if (!accepted) {
      res.diverged = true;
      res.diagnostic = "level-set step rejected after retries at s=" +
                       std::to_string(s) + " (drift or fluence increase)";
      break;
    }
    record((k + 1) * ds);
    if (k == s_steps / 2) res.field_snapshots.push_back(state.field.values());
  }
  res.field_snapshots.push_back(state.field.values());
  res.final_field = state.field;
  return res;
}

namespace {

// Kinematic upper bound of a single expectation: ascending-ascending
// eigenvalue matching.
double matching_upper_bound(const DensityMatrix& rho0, const Observable& theta) {
  const Eigen::VectorXd& lam = rho0.spectrum().values;   // ascending
  const Eigen::VectorXd& gam = theta.spectrum().values;  // ascending
  double acc = 0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) acc += lam[i] * gam[i];
  return acc;
}

}  // namespace

std::vector<TrackResult> sequential_maximization(
    const QuantumSystem& system, const DensityMatrix& rho0,
    const std::vector<Observable>& observables, const std::vector<int>& order,
    const ControlField& initial_field, const SequentialOptions& options) {
  const int m = static_cast<int>(observables.size());
  {
    std::vector<int> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < m; ++i)
      if (sorted[i] != i)
        throw std::invalid_argument("sequential_maximization: order must be a permutation");
  }

  std::vector<TrackResult> results;
  ControlField field = initial_field;
  std::vector<double> held;  // chi^{p_1..p_{r-1}}

  for (int r = 1; r <= m; ++r) {
    std::vector<Observable> active;
    for (int i = 0; i < r; ++i) active.push_back(observables[order[i]]);

    TrackState state = evaluate_track_state(system, rho0, active, field);
    const double phi0 = state.expectations[r - 1];
    const double bound = matching_upper_bound(rho0, active[r - 1]);

    const double ds = 1.0 / options.s_steps_per_stage;
    const double dt = state.gradients.grid.dt();
    bool clipped = false;
    // Stop a small margin short of the kinematic bound: exactly at the bound
    // the observable's gradient vanishes and later stages cannot hold it.
    const double margin = options.hold_tolerance / 4.0;
    double clip_value = bound - margin;
    int below_count = 0;

    TrackResult res;
    auto target_at = [&](double s) {
      Eigen::VectorXd w(r);
      for (int i = 0; i < r - 1; ++i) w[i] = held[i];
      w[r - 1] = clipped ? clip_value
                         : std::min(phi0 + s * (bound - phi0), bound - margin);
      return w;
    };
    auto record = [&](double s) {
      Eigen::VectorXd w = target_at(s);
      res.s.push_back(s);
      res.targets.push_back(w);
      res.expectations.push_back(state.expectations);
      res.tracking_error.push_back((state.expectations - w).norm());
      res.condition_numbers.push_back(state.gramian.condition_number);
      res.fluence.push_back(fluence(state.field));
    };
    record(0.0);
    res.field_snapshots.push_back(state.field.values());

    TrackPlan plan;
    plan.error_correction_beta = options.beta;
    plan.s_steps = options.s_steps_per_stage;
    for (int k = 0; k < options.s_steps_per_stage; ++k) {
      const double s = k * ds;
      double ramp_rate =
          (clipped || phi0 + s * (bound - phi0) >= bound - margin)
              ? 0.0
              : (bound - phi0);
      plan.targets.value = [&](double ss) { return target_at(ss); };
      plan.targets.derivative = [&, ramp_rate](double) {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(r);
        d[r - 1] = ramp_rate;
        return d;
      };
      Eigen::VectorXd incr = motc_step(state, plan, s);
      state = evaluate_track_state(
          system, rho0, active,
          state.field.with_values(state.field.values() + ds * incr));

      // Conditional-maximum detection, signal 1: the tracker starts trading
      // away previously-held expectations, meaning the ramp has crossed the
      // conditional boundary. Freeze the ramp and let the error-correction
      // term restore the held values over the remaining steps.
      if (!clipped && r > 1) {
        double drift = 0;
        for (int i = 0; i < r - 1; ++i)
          drift = std::max(drift, std::abs(state.expectations[i] - held[i]));
        if (drift > options.hold_tolerance / 4.0) {
          clipped = true;
          clip_value = std::min(state.expectations[r - 1], bound - margin);
        }
      }

      // Conditional-maximum detection, signal 2: the component of the new
      // gradient orthogonal to the previously-held gradients stagnates.
      Eigen::VectorXd g = state.gradients.samples.row(r - 1).transpose();
      if (r > 1) {
        Eigen::MatrixXd prior =
            state.gradients.samples.topRows(r - 1).transpose();  // M x (r-1)
        Eigen::MatrixXd gram = prior.transpose() * prior * dt;
        Eigen::VectorXd coef =
            gram.ldlt().solve(prior.transpose() * g * dt);
        g -= prior * coef;
      }
      double proj_norm = std::sqrt(g.squaredNorm() * dt);
      if (proj_norm < options.stagnation_norm) {
        if (++below_count >= options.stagnation_window && !clipped) {
          clipped = true;
          clip_value = std::min(state.expectations[r - 1], bound - margin);
        }
      } else {
        below_count = 0;
      }
      record((k + 1) * ds);
    }
    res.field_snapshots.push_back(state.field.values());
    res.final_field = state.field;

    for (int i = 0; i < r - 1; ++i)
      if (std::abs(state.expectations[i] - held[i]) > options.hold_tolerance)
        throw std::runtime_error(
            "sequential_maximization: stage " + std::to_string(r) +
            " failed to hold a previously maximized target");

    held.push_back(state.expectations[r - 1]);
    field = state.field;
    results.push_back(std::move(res));
  }
  return results;
}

Eigen::VectorXd geodesic_track(const DensityMatrix& rho0,
                               const OrthogonalObservableBasis& basis,
                               const cxmat& u0, const cxmat& w, double s) {
  return geodesic_targets(rho0, basis, u0, w).value(s);
}

TrackTargets geodesic_targets(const DensityMatrix& rho0,
                              const OrthogonalObservableBasis& basis,
                              const cxmat& u0, const cxmat& w) {
  require_unitary(u0, "geodesic_targets U0");
  require_unitary(w, "geodesic_targets W");
  UnitaryLog lg = matrix_log_unitary(u0.adjoint() * w);
  if (lg.branch_ambiguous)
    throw std::runtime_error("geodesic_targets: branch-ambiguous logarithm");
  const cxmat a = lg.hermitian;
  Eigen::SelfAdjointEigenSolver<cxmat> es(a);
  const cxmat v = es.eigenvectors();
  const Eigen::VectorXd d = es.eigenvalues();

  const int m = static_cast<int>(basis.basis.size());
  std::vector<cxmat> rotated;     // U0^dag B_i U0
  std::vector<cxmat> commutators; // [U0^dag B_i U0, A]
  for (const Observable& b : basis.basis) {
    cxmat r = u0.adjoint() * b.matrix() * u0;
    rotated.push_back(r);
    commutators.push_back(r * a - a * r);
  }
  const Eigen::MatrixXd c = basis.coefficients;
  const cxmat rho = rho0.matrix();

  auto exp_is = [v, d](double s) {
    cxvec ph(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) ph[i] = std::polar(1.0, s * d[i]);
    return cxmat(v * ph.asDiagonal() * v.adjoint());
  };

  TrackTargets t;
  t.value = [=](double s) {
    cxmat e = exp_is(s);
    Eigen::VectorXd vals(m);
    for (int i = 0; i < m; ++i)
      vals[i] = (rho * e.adjoint() * rotated[i] * e).trace().real();
    return Eigen::VectorXd(c * vals);
  };
  t.derivative = [=](double s) {
    cxmat e = exp_is(s);
    Eigen::VectorXd vals(m);
    for (int i = 0; i < m; ++i)
      vals[i] =
          (cxd(0, 1) * (rho * e.adjoint() * commutators[i] * e).trace()).real();
    return Eigen::VectorXd(c * vals);
  };
  return t;
}

AscentResult steepest_ascent(const QuantumSystem& system,
                             const DensityMatrix& rho0,
                             const Observable& observable,
                             const ControlField& initial_field,
                             int max_iterations, double tolerance) {
  std::vector<Observable> obs{observable};
  AscentResult res;
  ControlField field = initial_field;
  PropagatorPath path = propagate(system, field);
  double value = expectation(path.final_unitary(), rho0, observable);
  res.objective_trace.push_back(value);

  double step = 1.0;
  int flat_count = 0;
  for (int it = 0; it < max_iterations; ++it) {
    GradientVector grad =
        functional_gradient(system, field, rho0, obs, path);
    Eigen::VectorXd g = grad.samples.row(0).transpose();
    double gnorm2 = g.squaredNorm() * grad.grid.dt();
    if (gnorm2 < 1e-18) break;

    bool improved = false;
    for (int bt = 0; bt < 40; ++bt) {
      ControlField trial = field.with_values(field.values() + step * g);
      PropagatorPath tpath = propagate(system, trial);
      double tval = expectation(tpath.final_unitary(), rho0, observable);
      if (tval > value) {
        double gain = tval - value;
        field = std::move(trial);
        path = std::move(tpath);
        value = tval;
        improved = true;
        step *= 1.5;
        flat_count = (gain < tolerance) ? flat_count + 1 : 0;
        break;
      }
      step *= 0.5;
    }
    res.objective_trace.push_back(value);
    res.iterations = it + 1;
    if (!improved || flat_count >= 5) break;
  }
  res.field = field;
  res.objective = value;
  return res;
}

}  // namespace qpareto
