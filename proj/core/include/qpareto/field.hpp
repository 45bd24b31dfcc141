#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qpareto/linalg.hpp"

namespace qpareto {

// Uniform grid on [0, t_final] with `steps` intervals. Sample j lives at the
// left endpoint t_j = j * dt; field values are piecewise constant per step.
struct TimeGrid {
  double t_final = 100.0;
  int steps = 1024;

  double dt() const { return t_final / steps; }
  double time(int j) const { return j * dt(); }
  bool operator==(const TimeGrid&) const = default;
};

struct SineMode {
  double amplitude;
  double frequency;
  double phase;
};

class ControlField {
 public:
  static ControlField from_samples(TimeGrid grid, Eigen::VectorXd values);
  static ControlField from_modes(TimeGrid grid, std::vector<SineMode> modes);

  const TimeGrid& grid() const { return grid_; }
  // One value per step (left endpoints), size == grid().steps.
  const Eigen::VectorXd& values() const { return values_; }
  const std::optional<std::vector<SineMode>>& modes() const { return modes_; }

  double value(int j) const { return values_[j]; }
  ControlField with_values(Eigen::VectorXd values) const;

 private:
  ControlField() = default;
  TimeGrid grid_;
  Eigen::VectorXd values_;
  std::optional<std::vector<SineMode>> modes_;
};

struct FieldSpectrum {
  Eigen::VectorXd frequencies;  // angular, same units as transition frequencies
  Eigen::VectorXd power;
  double total_power() const { return power.sum(); }
};

class QuantumSystem;

// Sum of sinusoids at the transition frequencies |E_i - E_j| of H0, with
// amplitudes uniform on (0,1] and phases uniform on (0,2pi]. With
// amplitude_weighting, each amplitude is scaled by the multiplicity of its
// frequency in the transition spectrum (frequencies equal within 1e-9).
ControlField random_transition_field(const QuantumSystem& system, TimeGrid grid,
                                     std::uint64_t seed,
                                     bool amplitude_weighting = false);

// Same sinusoidal form with a caller-supplied frequency list.
ControlField detuned_field(const std::vector<double>& frequencies,
                           TimeGrid grid, std::uint64_t seed);

// Default detuning grid: omega_j = 0.1 * j * span, 1 <= j <= count.
std::vector<double> detuned_frequencies(double span, int count = 50);

// Left-Riemann quadrature of epsilon^2 over the grid.
double fluence(const ControlField& field);

// One-sided DFT power spectrum; Parseval: total_power == fluence.
FieldSpectrum power_spectrum(const ControlField& field);

}  // namespace qpareto
