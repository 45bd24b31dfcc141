// Command-line front end: quantum dynamics, tracking control, kinematic
// analysis, simulated measurement, and the canned study scenarios.

#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "qpareto/experiments.hpp"
#include "qpareto/io.hpp"
#include "qpareto/kinematics.hpp"
#include "qpareto/measurement.hpp"
#include "qpareto/motc.hpp"

namespace {

using nlohmann::json;
using namespace qpareto;

struct GlobalArgs {
  std::string config_path;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string preset = "desk";

  json config() const {
    if (config_path.empty()) return json::object();
    return io::read_json(config_path);
  }
  bool paper() const { return preset == "paper"; }
  int default_dim() const { return paper() ? 11 : 5; }
  std::filesystem::path out() const { return out_dir; }
};

QuantumSystem make_system(const json& cfg, const GlobalArgs& g) {
  int n = cfg.value("n", g.default_dim());
  std::string kind = cfg.value("system", "ladder");
  if (kind == "ladder") return ladder_system(n);
  if (kind == "random") return random_system(n, g.seed);
  throw std::invalid_argument("unknown system kind: " + kind);
}

DensityMatrix make_state(const json& cfg, const GlobalArgs& g,
                         const QuantumSystem& system) {
  std::string kind = cfg.value("rho", "thermal");
  if (kind == "thermal")
    return thermal_state(system, cfg.value("beta", 4.0));
  if (kind == "pure") return ground_state(system);
  if (kind == "random")
    return random_full_rank_state(system.dim(), g.seed + 11);
  throw std::invalid_argument("unknown state kind: " + kind);
}

TimeGrid make_grid(const json& cfg, const GlobalArgs& g) {
  return TimeGrid{cfg.value("t_final", 100.0),
                  cfg.value("grid_steps", g.paper() ? 1024 : 512)};
}

ControlField make_field(const json& cfg, const GlobalArgs& g,
                        const QuantumSystem& system, const TimeGrid& grid) {
  ControlField f = random_transition_field(system, grid, g.seed);
  double amp = cfg.value("amplitude", 0.05);
  return f.with_values(amp * f.values());
}

std::vector<Observable> diagonal_observables(const json& cfg, int n) {
  std::vector<Observable> obs;
  if (cfg.contains("observables")) {
    for (const auto& d : cfg.at("observables")) {
      cxmat t = cxmat::Zero(n, n);
      for (int i = 0; i < n; ++i) t(i, i) = d.at(i).get<double>();
      obs.emplace_back(t);
    }
  } else {
    // Default pair: top-level population and second-level population.
    cxmat t1 = cxmat::Zero(n, n);
    t1(n - 1, n - 1) = 1.0;
    cxmat t2 = cxmat::Zero(n, n);
    t2(1, 1) = 1.0;
    obs.emplace_back(t1);
    obs.emplace_back(t2);
  }
  return obs;
}

int cmd_simulate(const GlobalArgs& g) {
  json cfg = g.config();
  QuantumSystem system = make_system(cfg, g);
  DensityMatrix rho0 = make_state(cfg, g, system);
  TimeGrid grid = make_grid(cfg, g);
  ControlField field = make_field(cfg, g, system, grid);

  PropagatorPath path = propagate(system, field);
  io::write_field_csv(g.out() / "field.csv", field);
  io::write_spectrum_csv(g.out() / "spectrum.csv", power_spectrum(field));

  json report;
  report["fluence"] = fluence(field);
  report["lie_algebra_rank"] = lie_algebra_rank(system);
  json pops = json::array();
  const cxmat& ut = path.final_unitary();
  cxmat rho_t = ut * rho0.matrix() * ut.adjoint();
  for (int i = 0; i < system.dim(); ++i) pops.push_back(rho_t(i, i).real());
  report["final_populations"] = pops;
  report["seed"] = g.seed;
  io::write_json(g.out() / "simulate.json", report);
  std::cout << "simulate: wrote " << (g.out() / "field.csv").string() << "\n";
  return 0;
}

int cmd_track(const GlobalArgs& g) {
  json cfg = g.config();
  QuantumSystem system = make_system(cfg, g);
  DensityMatrix rho0 = make_state(cfg, g, system);
  TimeGrid grid = make_grid(cfg, g);
  ControlField eps0 = make_field(cfg, g, system, grid);
  std::vector<Observable> obs = diagonal_observables(cfg, system.dim());
  OrthogonalObservableBasis basis = gram_schmidt(obs);

  PropagatorPath path0 = propagate(system, eps0);
  cxmat w = random_unitary(system.dim(), g.seed + 7);
  TrackPlan plan;
  plan.targets = geodesic_targets(rho0, basis, path0.final_unitary(), w);
  plan.error_correction_beta = cfg.value("correction_beta", 10.0);
  plan.s_steps = cfg.value("s_steps", 300);
  plan.integrator =
      cfg.value("integrator", "euler") == "rk4" ? Integrator::kRk4
                                                : Integrator::kEuler;
  TrackResult res = run_track(system, rho0, obs, eps0, plan);

  io::write_track_csv(g.out() / "track.csv", res);
  io::write_field_csv(g.out() / "track_field.csv", res.final_field);
  std::cout << "track: final error " << io::format_double(res.final_error())
            << (res.diverged ? " (diverged: " + res.diagnostic + ")" : "")
            << "\n";
  return res.diverged ? 2 : 0;
}

int cmd_levelset(const GlobalArgs& g) {
  json cfg = g.config();
  QuantumSystem system = make_system(cfg, g);
  DensityMatrix rho0 = make_state(cfg, g, system);
  TimeGrid grid = make_grid(cfg, g);
  json fcfg = cfg;
  fcfg["amplitude"] = cfg.value("amplitude", 0.3);
  ControlField field = make_field(fcfg, g, system, grid);
  std::vector<Observable> obs = diagonal_observables(cfg, system.dim());

  LevelSetPolicy policy;
  policy.eta = cfg.value("eta", 10.0);
  policy.correction_beta = cfg.value("correction_beta", 0.0);
  TrackResult res = level_set_excursion(system, rho0, obs, field, policy,
                                        cfg.value("s_steps", 150));
  io::write_track_csv(g.out() / "levelset.csv", res);
  io::write_field_csv(g.out() / "levelset_field.csv", res.final_field);
  std::cout << "levelset: fluence " << io::format_double(res.fluence.front())
            << " -> " << io::format_double(res.fluence.back()) << "\n";
  return res.diverged ? 2 : 0;
}

int cmd_kinflow(const GlobalArgs& g) {
  json cfg = g.config();
  QuantumSystem system = make_system(cfg, g);
  DensityMatrix rho0 = make_state(cfg, g, system);
  std::vector<Observable> obs = diagonal_observables(cfg, system.dim());
  Eigen::VectorXd weights = Eigen::VectorXd::Constant(obs.size(), 1.0);
  if (cfg.contains("weights")) weights = io::vector_from_json(cfg.at("weights"));

  KinematicFlowResult res =
      kinematic_flow(rho0, obs, weights, random_unitary(system.dim(), g.seed),
                     cfg.value("flow_steps", 3000), 0.2, 1e-6);
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < res.objective.size(); ++i)
    rows.push_back({static_cast<double>(i), res.objective[i]});
  io::write_csv(g.out() / "kinflow.csv", {"step", "objective"}, rows);

  json report;
  report["converged"] = res.converged;
  report["expectations"] = io::vector_to_json(res.expectations);
  report["final_objective"] = res.objective.back();
  io::write_json(g.out() / "kinflow.json", report);
  std::cout << "kinflow: objective " << io::format_double(res.objective.back())
            << (res.converged ? " (converged)" : "") << "\n";
  return 0;
}

int cmd_pareto_analyze(const GlobalArgs& g) {
  json cfg = g.config();
  int n = cfg.value("n", 3);
  QuantumSystem system = ladder_system(n);
  DensityMatrix rho0 = make_state(cfg, g, system);
  std::vector<Observable> obs = diagonal_observables(cfg, n);

  json report;
  for (size_t k = 0; k < obs.size(); ++k) {
    PermutationClassPartition part = partition_permutations(rho0, obs[k]);
    io::write_partition_csv(
        g.out() / ("partition_" + std::to_string(k) + ".csv"), part);
    auto [lo, hi] = matching_extrema(rho0, obs[k]);
    report["observables"].push_back(
        {{"chi_min", lo},
         {"chi_max", hi},
         {"classes", part.classes.size()},
         {"max_class_dimension", part.dimensions[part.class_of_max]}});
  }
  if (obs.size() >= 2) {
    IntersectionBounds b = intersection_bounds(
        rho0, obs[0], obs[1],
        partition_permutations(rho0, obs[0]).class_of_max,
        partition_permutations(rho0, obs[1]).class_of_max);
    report["max_class_intersection"] = {
        {"upper", b.upper},
        {"commuting", b.commuting},
        {"has_common_permutation", b.has_common_permutation},
        {"lower", b.lower}};
  }
  io::write_json(g.out() / "pareto_analysis.json", report);
  std::cout << "pareto-analyze: " << obs.size() << " observables\n";
  return 0;
}

int cmd_weights(const GlobalArgs& g) {
  json cfg = g.config();
  int n = cfg.value("n", 3);
  QuantumSystem system = ladder_system(n);
  DensityMatrix rho0 = make_state(cfg, g, system);
  std::vector<Observable> obs = diagonal_observables(cfg, n);

  std::vector<int> req;
  if (cfg.contains("classes"))
    req = cfg.at("classes").get<std::vector<int>>();
  else
    for (const Observable& o : obs)
      req.push_back(partition_permutations(rho0, o).class_of_max);

  WeightSolution sol = weight_solver(rho0, obs, req);
  json report;
  report["feasible"] = sol.feasible;
  if (sol.feasible) {
    report["alpha"] = io::vector_to_json(sol.alpha);
    report["arrangement"] = sol.arrangement;
  } else {
    report["diagnostic"] = sol.diagnostic;
  }
  io::write_json(g.out() / "weights.json", report);
  std::cout << "weights: " << (sol.feasible ? "feasible" : "infeasible")
            << "\n";
  return sol.feasible ? 0 : 2;
}

int cmd_mub(const GlobalArgs& g) {
  json cfg = g.config();
  int n = cfg.value("n", g.paper() ? 11 : 5);
  MubFamily fam = build_mub(n);
  json report;
  report["n"] = n;
  report["bases"] = json::array();
  for (const cxmat& v : fam.bases)
    report["bases"].push_back(io::matrix_to_json(v));
  report["observable_count"] = mub_observables(fam).size();
  io::write_json(g.out() / "mub.json", report);
  std::cout << "mub: " << fam.bases.size() << " bases for N=" << n << "\n";
  return 0;
}

int cmd_measure(const GlobalArgs& g) {
  json cfg = g.config();
  int n = cfg.value("n", 3);
  long long shots = cfg.value("shots", 100000LL);
  DensityMatrix rho = random_full_rank_state(n, g.seed);
  MubFamily fam = build_mub(n);
  std::vector<ShotRecord> records;
  for (int r = 0; r < static_cast<int>(fam.bases.size()); ++r)
    records.push_back(
        simulate_measurement(rho, fam.bases[r], shots, g.seed * 31 + r, r));
  io::write_shots_csv(g.out() / "shots.csv", records);
  json report;
  report["rho"] = io::matrix_to_json(rho.matrix());
  report["shots_per_basis"] = shots;
  report["seed"] = g.seed;
  io::write_json(g.out() / "measure.json", report);
  std::cout << "measure: " << records.size() << " bases x " << shots
            << " shots\n";
  return 0;
}

int cmd_mle(const GlobalArgs& g) {
  json cfg = g.config();
  int n = cfg.value("n", 3);
  long long shots = cfg.value("shots", 100000LL);
  DensityMatrix truth = random_full_rank_state(n, g.seed);
  MubFamily fam = build_mub(n);
  std::vector<ShotRecord> records;
  for (int r = 0; r < static_cast<int>(fam.bases.size()); ++r)
    records.push_back(
        simulate_measurement(truth, fam.bases[r], shots, g.seed * 31 + r, r));
  StateEstimate est = mle_estimate(records, fam.bases, g.seed, truth.matrix());

  json report;
  report["rho_hat"] = io::matrix_to_json(est.rho_hat.matrix());
  report["log_likelihood"] = est.log_likelihood;
  report["iterations"] = est.iterations;
  report["fidelity_vs_truth"] = est.fidelity_vs_truth.value_or(-1.0);
  report["complete"] = est.complete;
  io::write_json(g.out() / "mle.json", report);
  std::cout << "mle: fidelity "
            << io::format_double(est.fidelity_vs_truth.value_or(-1.0)) << "\n";
  return 0;
}

int cmd_scenario(const GlobalArgs& g, const std::string& name) {
  json cfg = g.config();
  ScenarioOutcome out;
  if (cfg.contains("scenario")) {
    // A manifest was passed: replay it exactly.
    out = run_from_manifest(g.config_path, g.out());
  } else {
    ScenarioOptions opt;
    opt.out_dir = g.out();
    opt.seed = g.seed;
    opt.paper_preset = g.paper();
    opt.config = cfg;
    out = run_scenario(name, opt);
  }
  std::cout << out.summary << "\n";
  return out.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pareto-front exploration toolkit for quantum observable control"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "JSON configuration file");
  app.add_option("--seed", g.seed, "master random seed");
  app.add_option("--out", g.out_dir, "output directory");
  app.add_option("--preset", g.preset, "desk|paper scale preset")
      ->check(CLI::IsMember({"desk", "paper"}));

  auto* sim = app.add_subcommand("simulate", "propagate a control field");
  auto* track = app.add_subcommand("track", "multiobservable tracking run");
  auto* levelset =
      app.add_subcommand("levelset", "fluence-reducing level-set excursion");
  auto* kinflow = app.add_subcommand("kinflow", "gradient flow on U(N)");
  auto* pareto =
      app.add_subcommand("pareto-analyze", "critical-class analysis");
  auto* weights =
      app.add_subcommand("weights", "convex weight design for target classes");
  auto* mub = app.add_subcommand("mub", "mutually unbiased bases");
  auto* measure = app.add_subcommand("measure", "simulated shot statistics");
  auto* mle = app.add_subcommand("mle", "maximum-likelihood state estimate");
  auto* scen = app.add_subcommand("scenario", "run a named study");
  std::string scenario_name;
  scen->add_option("name", scenario_name, "scenario name")->required(false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(g);
    if (track->parsed()) return cmd_track(g);
    if (levelset->parsed()) return cmd_levelset(g);
    if (kinflow->parsed()) return cmd_kinflow(g);
    if (pareto->parsed()) return cmd_pareto_analyze(g);
    if (weights->parsed()) return cmd_weights(g);
    if (mub->parsed()) return cmd_mub(g);
    if (measure->parsed()) return cmd_measure(g);
    if (mle->parsed()) return cmd_mle(g);
    if (scen->parsed()) return cmd_scenario(g, scenario_name);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
