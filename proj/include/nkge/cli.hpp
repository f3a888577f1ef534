#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nkge/harness.hpp"

namespace nkge::cli {

enum class Subcommand { Solve, Temporal, Spatial, Longtime, Table1 };

std::string_view subcommand_name(Subcommand command) noexcept;
Subcommand parse_subcommand(std::string_view name);

/// Malformed configuration text; `line()` is 1-based, 0 when unknown.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& message, int line) : Error(message), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Problem given by expressions instead of a preset.
struct CustomProblem {
  std::vector<Interval> domain;
  int p = 1;
  std::string u0;
  std::string v0;
  Formulation formulation = Formulation::ComplexPower;
  RegimeKind regime = RegimeKind::LongTime;
};

struct RunConfig {
  Subcommand command = Subcommand::Solve;
  std::string preset;
  std::optional<CustomProblem> custom;

  double eps = 1.0;
  SchemeKind scheme = SchemeKind::Strang2;
  std::optional<double> tau;
  std::optional<double> kappa;
  Shape n;
  double T = 1.0;
  std::optional<double> t_eval;

  std::vector<double> taus;
  std::vector<int> n_list;
  std::vector<double> eps_list;
  int levels = 5;
  double kappa0 = 0.05;
  double eps0 = 1.0;
  int snapshots = 10;
  std::optional<std::int64_t> sample_every;
  ReferenceSettings reference;

  std::string output_dir = ".";
  std::string prefix;
  std::int64_t max_steps = 10'000'000;
  double max_seconds = 0.0;
  int jobs = 1;
  bool fused = false;

  /// Problem with eps applied.
  ProblemSpec problem() const;
  EvolveOptions evolve_options() const;
  /// Fully resolved configuration, defaults included.
  nlohmann::json to_json() const;
};

/// Dotted key path -> value text, e.g. {"reference.tau", "1e-5"}. Values are
/// read as YAML scalars; "a,b,c" is read as a list.
using Overrides = std::map<std::string, std::string>;

/// Parse YAML text (key-value with nested sections), apply overrides,
/// fill defaults and validate.
RunConfig parse_config(Subcommand command, std::string_view text, const Overrides& overrides = {});
RunConfig parse_config_file(Subcommand command, const std::filesystem::path& path, const Overrides& overrides = {});

/// Environment variable that replaces the configured output directory.
inline constexpr const char* kOutputDirEnv = "NKGE_OUTPUT_DIR";

/// Execute a validated configuration, writing `<prefix>.csv` and
/// `<prefix>.json` into the output directory. Returns the process exit code.
int run(const RunConfig& config, std::ostream& log, std::ostream& err);

/// Write through a temporary file and rename.
void write_file_atomically(const std::filesystem::path& path, const std::string& contents);

}  // namespace nkge::cli
