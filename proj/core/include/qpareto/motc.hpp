#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qpareto/gradient.hpp"
#include "qpareto/quantum.hpp"

namespace qpareto {

// Time-integrated products of observable gradients. Invertibility measures
// the local ability to steer all m expectations independently.
struct Gramian {
  static constexpr double kConditionLimit = 1e9;
  static constexpr double kTruncationRatio = 1e-9;

  Eigen::MatrixXd matrix;             // m x m symmetric PSD
  Eigen::VectorXd singular_values;    // descending
  double condition_number = 0.0;
  bool truncated = false;             // condition above limit: pseudo-inverse

  // Solve Gamma x = rhs; truncated pseudo-inverse when flagged. Throws if
  // exact solving is forced on an ill-conditioned matrix.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, bool force_exact = false) const;

 private:
  Eigen::MatrixXd eigvecs_;
  Eigen::VectorXd eigvals_;
  friend Gramian build_gramian(const GradientVector&);
};

Gramian build_gramian(const GradientVector& gradients);

enum class FreeFunction { kZero, kFluenceMinimizing, kCustom };
enum class Integrator { kEuler, kRk4 };

// Target path w_s with its s-derivative.
struct TrackTargets {
  std::function<Eigen::VectorXd(double)> value;
  std::function<Eigen::VectorXd(double)> derivative;
};

struct TrackPlan {
  TrackTargets targets;
  FreeFunction free_function = FreeFunction::kZero;
  double eta = 10.0;                                   // fluence policy strength
  std::function<double(double)> fluence_weight;        // S(t) > 0; default 1
  std::function<Eigen::VectorXd(double, const ControlField&)> custom_free;
  double error_correction_beta = 10.0;                 // beta >= 0
  Integrator integrator = Integrator::kEuler;
  int s_steps = 500;
  bool force_exact_gramian = false;
};

struct TrackResult {
  std::vector<double> s;
  std::vector<Eigen::VectorXd> targets;
  std::vector<Eigen::VectorXd> expectations;
  std::vector<double> tracking_error;      // ||Phi_s - w_s||_2
  std::vector<double> condition_numbers;
  std::vector<double> fluence;
  std::vector<Eigen::VectorXd> field_snapshots;  // s = 0, mid, final
  ControlField final_field = ControlField::from_samples({1.0, 1}, Eigen::VectorXd::Zero(1));
  bool diverged = false;
  std::string diagnostic;

  double final_error() const { return tracking_error.back(); }
  double max_error() const;
};

// Field, propagators, gradients and expectations at one point of the search.
struct TrackState {
  ControlField field;
  PropagatorPath path;
  GradientVector gradients;
  Eigen::VectorXd expectations;
  Gramian gramian;
};

TrackState evaluate_track_state(const QuantumSystem& system,
                                const DensityMatrix& rho0,
                                const std::vector<Observable>& observables,
                                const ControlField& field);

// d eps/ds at algorithmic time s:
//   f_s(t) + [c_s + dw/ds - int a_s f_s dt]^T Gamma^-1 a_s(t),
// with c_s = beta (w_s - Phi_s). beta = 0 recovers the plain tracking flow.
Eigen::VectorXd motc_step(const TrackState& state, const TrackPlan& plan,
                          double s);

TrackResult run_track(const QuantumSystem& system, const DensityMatrix& rho0,
                      const std::vector<Observable>& observables,
                      const ControlField& initial_field, const TrackPlan& plan);

struct LevelSetPolicy {
  FreeFunction free_function = FreeFunction::kFluenceMinimizing;
  double eta = 10.0;
  std::function<double(double)> fluence_weight;  // S(t), default 1
  std::function<Eigen::VectorXd(double, const ControlField&)> custom_free;
  double correction_beta = 0.0;   // retry with correction when drifting
  double drift_abort = 1e-2;      // per-observable drift limit
};

// Move within the level set {Phi_k = chi_k} along the free function, with the
// gradient-span component projected out. chi is fixed at the starting field's
// expectations.
TrackResult level_set_excursion(const QuantumSystem& system,
                                const DensityMatrix& rho0,
                                const std::vector<Observable>& observables,
                                const ControlField& field_on_front,
                                const LevelSetPolicy& policy, int s_steps);

struct SequentialOptions {
  int s_steps_per_stage = 200;
  double stagnation_norm = 1e-4;   // projected-gradient norm threshold
  int stagnation_window = 10;      // consecutive steps below threshold
  double hold_tolerance = 1e-2;    // prior targets must stay within this
  double beta = 10.0;
};

// Maximize observables one at a time in the given order, holding previously
// maximized expectations fixed; m tracking problems of dimension 1..m.
std::vector<TrackResult> sequential_maximization(
    const QuantumSystem& system, const DensityMatrix& rho0,
    const std::vector<Observable>& observables, const std::vector<int>& order,
    const ControlField& initial_field, const SequentialOptions& options = {});

// w_s mapped from the geodesic Q_s = U0 exp(iAs), A = -i log(U0^dag W),
// so that Q_0 = U0 and Q_1 = W.
Eigen::VectorXd geodesic_track(const DensityMatrix& rho0,
                               const OrthogonalObservableBasis& basis,
                               const cxmat& u0, const cxmat& w, double s);

// The same geodesic as a TrackTargets pair with the analytic derivative.
TrackTargets geodesic_targets(const DensityMatrix& rho0,
                              const OrthogonalObservableBasis& basis,
                              const cxmat& u0, const cxmat& w);

struct AscentResult {
  ControlField field = ControlField::from_samples({1.0, 1}, Eigen::VectorXd::Zero(1));
  double objective = 0.0;
  std::vector<double> objective_trace;
  int iterations = 0;
};

// Dynamic steepest ascent of a single observable expectation with adaptive
// step size (line search).
AscentResult steepest_ascent(const QuantumSystem& system,
                             const DensityMatrix& rho0,
                             const Observable& observable,
                             const ControlField& initial_field,
                             int max_iterations = 500, double tolerance = 1e-8);

}  // namespace qpareto
