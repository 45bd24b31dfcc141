#include "qpareto/field.hpp"

#include <cmath>
#include <numbers>

#include "qpareto/quantum.hpp"

namespace qpareto {

ControlField ControlField::from_samples(TimeGrid grid, Eigen::VectorXd values) {
  if (values.size() != grid.steps)
    throw std::invalid_argument("ControlField: one sample per step expected");
  if (!values.allFinite())
    throw std::invalid_argument("ControlField: non-finite sample");
  ControlField f;
  f.grid_ = grid;
  f.values_ = std::move(values);
  return f;
}

ControlField ControlField::from_modes(TimeGrid grid, std::vector<SineMode> modes) {
  Eigen::VectorXd values = Eigen::VectorXd::Zero(grid.steps);
  for (int j = 0; j < grid.steps; ++j) {
    double t = grid.time(j);
    double v = 0;
    for (const SineMode& m : modes)
      v += m.amplitude * std::sin(m.frequency * t + m.phase);
    values[j] = v;
  }
  ControlField f = from_samples(grid, std::move(values));
  f.modes_ = std::move(modes);
  return f;
}

ControlField ControlField::with_values(Eigen::VectorXd values) const {
  return from_samples(grid_, std::move(values));
}

namespace {

std::vector<SineMode> sample_modes(const std::vector<double>& freqs,
                                   std::mt19937_64& rng) {
  // Uniform on (0,1] and (0,2pi]: flip the half-open side of the stdlib draw.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SineMode> modes;
  modes.reserve(freqs.size());
  for (double w : freqs) {
    double a = 1.0 - unit(rng);
    double phi = (1.0 - unit(rng)) * 2.0 * std::numbers::pi;
    modes.push_back({a, w, phi});
  }
  return modes;
}

}  // namespace

ControlField random_transition_field(const QuantumSystem& system, TimeGrid grid,
                                     std::uint64_t seed,
                                     bool amplitude_weighting) {
  const Eigen::VectorXd& e = system.energies();
  std::vector<double> freqs;
  for (int i = 0; i < system.dim(); ++i)
    for (int j = i + 1; j < system.dim(); ++j)
      freqs.push_back(std::abs(e[i] - e[j]));

  std::mt19937_64 rng(seed);
  std::vector<SineMode> modes = sample_modes(freqs, rng);
  if (amplitude_weighting) {
    for (SineMode& m : modes) {
      int mult = 0;
      for (double w : freqs)
        if (std::abs(w - m.frequency) <= 1e-9) ++mult;
      m.amplitude *= mult;
    }
  }
  return ControlField::from_modes(grid, std::move(modes));
}

ControlField detuned_field(const std::vector<double>& frequencies,
                           TimeGrid grid, std::uint64_t seed) {
  if (frequencies.empty())
    throw std::invalid_argument("detuned_field: empty frequency list");
  std::mt19937_64 rng(seed);
  return ControlField::from_modes(grid, sample_modes(frequencies, rng));
}

std::vector<double> detuned_frequencies(double span, int count) {
  std::vector<double> freqs;
  freqs.reserve(count);
  for (int j = 1; j <= count; ++j) freqs.push_back(0.1 * j * span);
  return freqs;
}

double fluence(const ControlField& field) {
  return field.values().squaredNorm() * field.grid().dt();
}

FieldSpectrum power_spectrum(const ControlField& field) {
  const Eigen::VectorXd& x = field.values();
  const int m = static_cast<int>(x.size());
  const double dt = field.grid().dt();
  const int bins = m / 2 + 1;

  FieldSpectrum spec;
  spec.frequencies.resize(bins);
  spec.power.resize(bins);
  // Direct DFT; O(M^2) is fine at the default M=1024.
  for (int k = 0; k < bins; ++k) {
    cxd acc(0, 0);
    const double w = -2.0 * std::numbers::pi * k / m;
    for (int j = 0; j < m; ++j) acc += x[j] * std::polar(1.0, w * j);
    double p = std::norm(acc) * dt / m;
    // Fold the conjugate-symmetric half into the one-sided spectrum.
    if (k != 0 && !(m % 2 == 0 && k == m / 2)) p *= 2.0;
    spec.power[k] = p;
    spec.frequencies[k] = 2.0 * std::numbers::pi * k / (m * dt);
  }
  return spec;
}

}  // namespace qpareto
