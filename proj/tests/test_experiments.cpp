#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qpareto/experiments.hpp"
#include "qpareto/io.hpp"

using namespace qpareto;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("reference 11-level system layout") {
  QuantumSystem sys = paper_system();
  CHECK(sys.dim() == 11);
  CHECK(sys.h0()(0, 0).real() == doctest::Approx(0.1));
  CHECK(sys.h0()(10, 10).real() == doctest::Approx(1.1));
  CHECK(sys.dipole()(3, 3).real() == doctest::Approx(1.0));
  CHECK(sys.dipole()(3, 4).real() == doctest::Approx(0.15));
  CHECK(sys.dipole()(3, 5).real() == doctest::Approx(0.08));
  CHECK(sys.dipole()(3, 6).real() == doctest::Approx(0.0));
}

TEST_CASE("thermal and ground states are valid and ordered") {
  QuantumSystem sys = ladder_system(5);
  DensityMatrix th = thermal_state(sys, 4.0);
  CHECK(th.rank() == 5);
  CHECK(std::abs(th.matrix().trace().real() - 1.0) < 1e-10);
  // Boltzmann weights decay with energy.
  for (int i = 1; i < 5; ++i)
    CHECK(th.matrix()(i, i).real() < th.matrix()(i - 1, i - 1).real());
  DensityMatrix g = ground_state(sys);
  CHECK(g.rank() == 1);
  CHECK(g.matrix()(0, 0).real() == doctest::Approx(1.0));
}

TEST_CASE("csv doubles round-trip through the shortest representation") {
  for (double v : {0.1, 1.0 / 3.0, 1e-17, 123456.789, -0.0}) {
    std::string s = io::format_double(v);
    CHECK(std::stod(s) == v);
  }
}

TEST_CASE("matrix and vector json round trips") {
  cxmat m = random_hermitian(3, std::uint64_t{5});
  CHECK(max_abs(io::matrix_from_json(io::matrix_to_json(m)) - m) == 0.0);
  Eigen::VectorXd v(4);
  v << 0.25, -1.5, 3.25, 1e-9;
  CHECK((io::vector_from_json(io::vector_to_json(v)) - v).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("scenario registry") {
  std::vector<std::string> names = scenario_names();
  CHECK(names.size() == 4);
  ScenarioOptions opt;
  opt.out_dir = fs::temp_directory_path() / "qpareto_test_unknown";
  CHECK_THROWS(run_scenario("no_such_scenario", opt));
}

TEST_CASE("tomography scenario writes a reproducible manifest") {
  fs::path base = fs::temp_directory_path() / "qpareto_test_tomo";
  fs::remove_all(base);
  ScenarioOptions opt;
  opt.out_dir = base / "run1";
  opt.seed = 5;
  opt.config = {{"shots", 2000}};
  ScenarioOutcome out = run_scenario("tomography_roundtrip", opt);
  CHECK(out.exit_code == 0);
  CHECK(fs::exists(opt.out_dir / "manifest.json"));
  CHECK(fs::exists(opt.out_dir / "shots.csv"));
  CHECK(fs::exists(opt.out_dir / "report.json"));

  ScenarioOutcome replay =
      run_from_manifest(opt.out_dir / "manifest.json", base / "run2");
  CHECK(replay.exit_code == out.exit_code);
  CHECK(slurp(base / "run2" / "shots.csv") == slurp(opt.out_dir / "shots.csv"));
  fs::remove_all(base);
}
