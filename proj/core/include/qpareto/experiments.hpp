#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "qpareto/quantum.hpp"

namespace qpareto {

// The reference 11-level model: H0 = diag(0.1, ..., 1.1); dipole with unit
// diagonal, 0.15 on the first off-diagonal and 0.08 on the second.
QuantumSystem paper_system();

// The same coupling pattern at any dimension (energies 0.1 j).
QuantumSystem ladder_system(int n);

// Random nondegenerate Hamiltonian with a banded real symmetric dipole.
QuantumSystem random_system(int n, std::uint64_t seed);

// exp(-beta H0)/Z.
DensityMatrix thermal_state(const QuantumSystem& system, double beta = 4.0);
DensityMatrix ground_state(const QuantumSystem& system);
DensityMatrix random_full_rank_state(int n, std::uint64_t seed);

struct ScenarioOptions {
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 1;
  bool paper_preset = false;   // desk preset (small N) otherwise
  nlohmann::json config;       // optional parameter overrides (manifest echo)
};

struct ScenarioOutcome {
  int exit_code = 0;           // 0 ok; 2 expected failure recorded as data
  std::string summary;
  nlohmann::json manifest;
};

std::vector<std::string> scenario_names();

// Runs one named study end to end, writing CSV data plus a manifest.json
// sufficient to reproduce every output byte-for-byte.
ScenarioOutcome run_scenario(const std::string& name,
                             const ScenarioOptions& options);

// Re-run from a previously written manifest.
ScenarioOutcome run_from_manifest(const std::filesystem::path& manifest_path,
                                  const std::filesystem::path& out_dir);

}  // namespace qpareto
