#pragma once

// Error measurement against fine reference solutions, convergence tables and
// the parameter sweeps built on them.

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nkge/splitting.hpp"

namespace nkge {

/// Reference resolution and step. Unset fields take the harness defaults.
struct ReferenceSettings {
  std::optional<Shape> shape;
  std::optional<double> tau;
  SchemeKind scheme = SchemeKind::Strang2;
  /// Recompute errors against a reference refined in both N and tau and flag
  /// records whose e1 moves by more than `tolerance` (relative).
  bool verify = false;
  double tolerance = 0.01;
};

/// max(120, 2 N) per axis.
Shape default_reference_shape(const Shape& largest);
/// tau_min / k with the smallest integer k >= 16 giving a step <= 1e-4, so the
/// reference step divides every step of the sweep.
double default_reference_tau(double tau_min);

struct ReferenceSolution {
  GridPtr grid;
  double tau = 0.0;
  SchemeKind scheme = SchemeKind::Strang2;
  std::vector<SpectralUV> snapshots;

  /// Snapshot at time t; throws MissingSnapshotError if none was stored.
  const SpectralUV& at(double t) const;
};

ReferenceSolution compute_reference(const ProblemSpec& spec, std::span<const double> times, const Shape& shape,
                                    double tau, SchemeKind scheme = SchemeKind::Strang2,
                                    const EvolveOptions& options = {});

struct H1Error {
  /// H^1 norm of the displacement error.
  double e1 = 0.0;
  /// L^2 norm of the velocity error.
  double ev0 = 0.0;
};

/// Zero-pad the numerical spectra to the reference grid and measure the difference.
H1Error error_h1(const SpectralUV& numerical, const SpectralUV& reference);
H1Error error_h1(const StateUV& numerical, const ReferenceSolution& reference, double t);

struct ErrorRecord {
  SchemeKind scheme = SchemeKind::Strang2;
  int p = 1;
  double eps = 1.0;
  double tau = 0.0;
  std::optional<double> kappa;
  Shape n;
  double t = 0.0;
  double e1 = 0.0;
  double e1max = 0.0;
  bool reference_limited = false;
};

inline constexpr const char* kErrorCsvHeader = "scheme,p,eps,tau,kappa,N,t,e1,e1max";

/// Fixed 17-significant-digit rendering used in every emitted file.
std::string format_number(double value);
std::string format_shape(const Shape& shape);
void write_error_csv(std::ostream& out, std::span<const ErrorRecord> records);

struct ConvergenceRow {
  double parameter = 0.0;
  double error = 0.0;
  /// log(e_prev / e) / log(factor); empty for the first row or at the round-off floor.
  std::optional<double> order;
};

/// Lowest floor ever used; errors at or below the table floor get no order.
inline constexpr double kRoundOffFloor = 1e-13;

struct ConvergenceTable {
  double factor = 2.0;
  double floor = kRoundOffFloor;
  std::vector<ConvergenceRow> rows;
};

ConvergenceTable make_convergence_table(std::span<const double> parameters, std::span<const double> errors,
                                        double factor, double floor = kRoundOffFloor);
/// Least-squares slope of log(error) against log(parameter) over rows above the table floor.
double fitted_order(const ConvergenceTable& table);

/// Rounding accumulated by a reference run of `steps` steps, measured in the
/// H^1 norm: steps * machine epsilon * |u_ref|_1, never below kRoundOffFloor.
double round_off_floor(const SpectralUV& reference, std::int64_t steps);

/// Run `count` independent tasks on up to `jobs` threads. Results must be
/// written by index, which keeps the assembled output order-independent.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task);

struct TemporalResult {
  ConvergenceTable table;
  std::vector<ErrorRecord> records;
  double slope = 0.0;
};

TemporalResult temporal_convergence(const ProblemSpec& spec, const Shape& n, SchemeKind scheme,
                                    std::span<const double> taus, double t_eval,
                                    const ReferenceSettings& reference = {}, int jobs = 1,
                                    const EvolveOptions& options = {});
/// Same, against a precomputed reference holding a snapshot at t_eval.
TemporalResult temporal_convergence(const ProblemSpec& spec, const Shape& n, SchemeKind scheme,
                                    std::span<const double> taus, double t_eval,
                                    const ReferenceSolution& reference, int jobs = 1,
                                    const EvolveOptions& options = {});

struct LongtimeRun {
  double eps = 0.0;
  double t_final = 0.0;
  std::int64_t sample_every = 1;
  std::vector<ErrorRecord> records;
  double final_e1max = 0.0;
};

struct LongtimeResult {
  std::vector<LongtimeRun> runs;
  /// final_e1max(eps_k) / final_e1max(eps_{k+1})
  std::vector<double> ratios;
};

/// Steps between e1 samples: max(1, round(steps / 1000)).
std::int64_t default_sample_interval(std::int64_t steps);

LongtimeResult longtime_sweep(const ProblemSpec& spec, const Shape& n, SchemeKind scheme, double tau,
                              std::span<const double> eps_list, std::optional<std::int64_t> sample_every = {},
                              const ReferenceSettings& reference = {}, int jobs = 1,
                              const EvolveOptions& options = {});

struct Table1Result {
  std::vector<double> eps;
  std::vector<double> kappa;
  /// errors[i][j] = e1 at r = T for eps[i], kappa[j]
  std::vector<std::vector<double>> errors;
  std::vector<ConvergenceTable> rows;
  std::vector<ErrorRecord> records;
};

Table1Result table1_experiment(const ProblemSpec& spec, const Shape& n, double kappa0, double eps0, int levels,
                               const ReferenceSettings& reference = {}, int jobs = 1,
                               const EvolveOptions& options = {});

struct SpatialResult {
  ConvergenceTable table;
  std::vector<ErrorRecord> records;
};

/// e1 against N at t_eval. Unless the settings say otherwise the reference uses
/// the same tau, so temporal error cancels and only the spatial part remains.
SpatialResult spatial_convergence(const ProblemSpec& spec, SchemeKind scheme, std::span<const int> n_list,
                                  double tau, double t_eval, const ReferenceSettings& reference = {},
                                  int jobs = 1, const EvolveOptions& options = {});

nlohmann::json to_json(const ConvergenceTable& table);
nlohmann::json to_json(const ErrorRecord& record);

}  // namespace nkge
