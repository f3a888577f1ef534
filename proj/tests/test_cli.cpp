#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nkge/cli.hpp"

using namespace nkge;
using namespace nkge::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nkge_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config defaults and provenance", "[cli]") {
  const auto c = parse_config(Subcommand::Temporal, "preset: longtime-1d-p2\neps: 1/2\n");
  CHECK(c.eps == 0.5);
  CHECK(c.n == Shape{64});
  CHECK(c.taus == std::vector<double>{0.1, 0.05, 0.025, 0.0125});
  CHECK(c.scheme == SchemeKind::Strang2);
  CHECK(c.prefix == "temporal");
  const auto j = c.to_json();
  CHECK(j["eps"] == 0.5);
  CHECK(j["budget"]["max_steps"] == 10'000'000);
  CHECK(j["reference"]["scheme"] == "strang2");

  const auto t1 = parse_config(Subcommand::Table1, "");
  CHECK(t1.preset == "osc-1d-p1");
  CHECK(t1.levels == 5);
  CHECK(t1.n == Shape{128});
  CHECK(t1.kappa0 == 0.05);

  const auto lt = parse_config(Subcommand::Longtime, "{preset: longtime-2d-p1}");
  CHECK(lt.n == Shape{32, 32});
  CHECK(lt.eps_list == std::vector<double>{0.5, 0.25, 0.125});
  CHECK(*lt.tau == 0.05);

  const auto osc = parse_config(Subcommand::Solve, "preset: osc-1d-p1\neps: 0.5\nkappa: 0.0125\n");
  CHECK(*osc.tau == Catch::Approx(0.05));
}

TEST_CASE("config validation messages", "[cli]") {
  CHECK_THROWS_WITH(parse_config(Subcommand::Solve, "preset: longtime-1d-p2\neps: 1.5\ntau: 0.1\n"),
                    Catch::Matchers::ContainsSubstring("epsilon must lie in (0,1]"));
  CHECK_THROWS_WITH(parse_config(Subcommand::Solve, "preset: longtime-1d-p2\nN: 63\ntau: 0.1\n"),
                    Catch::Matchers::ContainsSubstring("N must be even"));
  CHECK_THROWS_WITH(parse_config(Subcommand::Solve, "preset: longtime-1d-p2\nN: 2\ntau: 0.1\n"),
                    Catch::Matchers::ContainsSubstring("at least 4"));
  CHECK_THROWS_AS(parse_config(Subcommand::Solve, "preset: nope\ntau: 0.1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config(Subcommand::Solve, "preset: longtime-1d-p2\n"), ValidationError);
  CHECK_THROWS_AS(parse_config(Subcommand::Solve, "tau: 0.1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config(Subcommand::Table1, "preset: longtime-1d-p2\n"), ValidationError);
  CHECK_THROWS_AS(parse_config(Subcommand::Temporal, "preset: longtime-1d-p2\ntaus: [0.1, 0.2]\nscheme: rk4\n"),
                  ValidationError);
  CHECK_THROWS_WITH(parse_config(Subcommand::Solve, "preset: longtime-1d-p2\ntau: abc\n"),
                    Catch::Matchers::ContainsSubstring("tau must be a number"));
  try {
    parse_config(Subcommand::Solve, "preset: longtime-1d-p2\ntau: 0.1\nreference:\n  tua: 1\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 4);
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("reference.tua"));
  }
  try {
    parse_config(Subcommand::Solve, "preset: [longtime\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.line() >= 1);
  }
}

TEST_CASE("overrides take precedence", "[cli]") {
  const Overrides o{{"eps", "0.25"}, {"reference.tau", "1e-5"}, {"taus", "0.2,0.1"}, {"N", "16"},
                    {"output.dir", "/tmp/x"}};
  const auto c = parse_config(Subcommand::Temporal, "preset: longtime-1d-p2\neps: 0.5\nreference:\n  N: 128\n", o);
  CHECK(c.eps == 0.25);
  CHECK(*c.reference.tau == 1e-5);
  CHECK(*c.reference.shape == Shape{128});
  CHECK(c.taus == std::vector<double>{0.2, 0.1});
  CHECK(c.n == Shape{16});
  CHECK(c.output_dir == "/tmp/x");
}

TEST_CASE("custom problems from expressions", "[cli]") {
  const auto c = parse_config(Subcommand::Solve,
                              "problem:\n"
                              "  domain: [0, 2*pi]\n"
                              "  p: 2\n"
                              "  u0: 3/(2+cos(x)^2)\n"
                              "  v0: 3/(4+cos(x)^2)\n"
                              "N: 32\n"
                              "tau: 0.1\n");
  const auto spec = c.problem();
  const auto ref = preset("longtime-1d-p2");
  for (double x : {0.0, 0.3, 2.0}) {
    CHECK(std::abs(spec.u0.fn(x, 0.0) - ref.u0.fn(x, 0.0)) <= 1e-15);
    CHECK(std::abs(spec.v0.fn(x, 0.0) - ref.v0.fn(x, 0.0)) <= 1e-15);
  }
  CHECK(spec.domain.axis(0).upper == Catch::Approx(6.283185307179586));
  CHECK_THROWS_AS(parse_config(Subcommand::Solve,
                               "problem:\n  domain: [0, 1]\n  u0: sin(\n  v0: 0\nN: 8\ntau: 0.1\n"),
                  ValidationError);
  CHECK_THROWS_AS(parse_config(Subcommand::Solve, "problem:\n  domain: {x: [0, 1], y: [0, 1]}\n  u0: x\n  v0: 0\n"
                                                  "  formulation: real-cubic\n  p: 2\nN: 8\ntau: 0.1\n"),
                  ValidationError);
}

TEST_CASE("solve writes byte-identical outputs", "[cli]") {
  const auto dir = scratch_dir("solve");
  const Overrides o{{"output.dir", dir.string()}};
  auto c = parse_config(Subcommand::Solve, "preset: longtime-1d-p2\neps: 0.5\ntau: 0.01\nT: 1\n", o);
  std::ostringstream log, err;
  REQUIRE(run(c, log, err) == 0);
  const std::string first = slurp(dir / "solve.csv");
  const auto summary = nlohmann::json::parse(slurp(dir / "solve.json"));
  CHECK(summary["config"]["eps"] == 0.5);
  CHECK(summary["results"]["steps"] == 1600);
  CHECK(summary["results"]["max_relative_energy_drift"].get<double>() < 1e-4);
  CHECK(fs::exists(dir / "solve_final.csv"));
  REQUIRE(run(c, log, err) == 0);
  CHECK(slurp(dir / "solve.csv") == first);
  CHECK_FALSE(fs::exists(dir / "solve.csv.tmp"));
}

TEST_CASE("blow-up exits nonzero and names the time", "[cli]") {
  const auto dir = scratch_dir("blowup");
  auto c = parse_config(Subcommand::Solve,
                        "problem:\n  domain: [0, 2*pi]\n  u0: 100*cos(x)\n  v0: 0\nN: 16\ntau: 0.5\nT: 10\n",
                        {{"output.dir", dir.string()}});
  std::ostringstream log, err;
  CHECK(run(c, log, err) == 2);
  CHECK_THAT(err.str(), Catch::Matchers::ContainsSubstring("t_n ="));
  CHECK_FALSE(fs::exists(dir / "solve.csv"));

  auto budget = parse_config(Subcommand::Solve, "preset: longtime-1d-p2\neps: 0.5\ntau: 0.01\nbudget:\n  max_steps: 10\n",
                             {{"output.dir", dir.string()}});
  CHECK(run(budget, log, err) == 2);
}

TEST_CASE("table1 with three levels", "[cli]") {
  const auto dir = scratch_dir("table1");
  const auto c = parse_config(Subcommand::Table1, "preset: osc-1d-p1\nlevels: 3\n", {{"output.dir", dir.string()}});
  std::ostringstream log, err;
  REQUIRE(run(c, log, err) == 0);
  const auto summary = nlohmann::json::parse(slurp(dir / "table1.json"));
  const auto& errors = summary["results"]["errors"];
  REQUIRE(errors.size() == 3);
  CHECK(errors[0][0].get<double>() == Catch::Approx(1.11e-2).epsilon(0.1));
  std::istringstream csv(slurp(dir / "table1.csv"));
  std::string line;
  int rows = 0;
  std::getline(csv, line);
  CHECK(line == "scheme,p,eps,tau,kappa,N,t,e1,e1max");
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 9);
}

TEST_CASE("output directory from the environment", "[cli]") {
  const auto dir = scratch_dir("env");
  ::setenv(kOutputDirEnv, dir.string().c_str(), 1);
  const auto c = parse_config(Subcommand::Solve, "preset: longtime-1d-p2\ntau: 0.1\noutput:\n  dir: elsewhere\n");
  const auto flagged =
      parse_config(Subcommand::Solve, "preset: longtime-1d-p2\ntau: 0.1\n", {{"output.dir", "flag-wins"}});
  ::unsetenv(kOutputDirEnv);
  CHECK(c.output_dir == dir.string());
  CHECK(flagged.output_dir == "flag-wins");
}

TEST_CASE("unwritable output is an I/O error", "[cli]") {
  const auto dir = scratch_dir("io");
  std::ofstream(dir / "blocker") << "file";
  const auto c = parse_config(Subcommand::Solve, "preset: longtime-1d-p2\ntau: 0.5\nT: 1\n",
                              {{"output.dir", (dir / "blocker" / "sub").string()}});
  std::ostringstream log, err;
  CHECK(run(c, log, err) == 3);
}
