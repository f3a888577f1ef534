#include "nkge/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include <fmt/format.h>

namespace nkge {
namespace {

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

// Number of steps of size tau landing exactly (to 1e-9) on t.
std::int64_t exact_steps(double t, double tau, const char* what) {
  const std::int64_t n = step_count(t, tau);
  if (!same_time(static_cast<double>(n) * tau, t)) {
    throw ValidationError(what, fmt::format("time {} is not a multiple of the step {}", t, tau));
  }
  return n;
}

// Integer ratio coarse / fine, required to be exact.
std::int64_t step_ratio(double coarse, double fine) {
  const std::int64_t r = std::llround(coarse / fine);
  if (r < 1 || !same_time(static_cast<double>(r) * fine, coarse)) {
    throw ValidationError("reference.tau", fmt::format("reference step {} does not divide the step {}", fine, coarse));
  }
  return r;
}

Shape refined(const Shape& shape) {
  Shape out = shape;
  for (auto& n : out) n *= 2;
  return out;
}

std::optional<double> kappa_of(const ProblemSpec& spec, double tau) {
  if (spec.regime.kind != RegimeKind::Oscillatory) return std::nullopt;
  return tau * spec.coupling();
}

SpectralUV run_to(const ProblemSpec& spec, const Shape& n, SchemeKind scheme, double tau, double t,
                  const EvolveOptions& options) {
  const GridPtr grid = build_grid(spec.domain, n);
  const std::int64_t steps = exact_steps(t, tau, "t_eval");
  SplitState state = make_split_state(spec.formulation, initial_state(spec, grid));
  run_steps(Stepper(grid, scheme, tau, binding_of(spec)), state, steps, {}, {}, options);
  return uv_spectra(state);
}

struct ResolvedReference {
  Shape shape;
  double tau;
  SchemeKind scheme;
};

ResolvedReference resolve(const ReferenceSettings& settings, const Shape& largest, double tau_min) {
  return {settings.shape.value_or(default_reference_shape(largest)),
          settings.tau.value_or(default_reference_tau(tau_min)), settings.scheme};
}

}  // namespace

Shape default_reference_shape(const Shape& largest) {
  Shape out = largest;
  for (auto& n : out) n = std::max(120, 2 * n);
  return out;
}

double default_reference_tau(double tau_min) {
  if (!(tau_min > 0.0)) throw ValidationError("tau", "tau must be positive");
  const double k = std::max(16.0, std::ceil(tau_min / 1e-4 - 1e-9));
  return tau_min / k;
}

const SpectralUV& ReferenceSolution::at(double t) const {
  for (const auto& s : snapshots) {
    if (same_time(s.t, t)) return s;
  }
  throw MissingSnapshotError(fmt::format("reference has no snapshot at t = {}", t));
}

ReferenceSolution compute_reference(const ProblemSpec& spec, std::span<const double> times, const Shape& shape,
                                    double tau, SchemeKind scheme, const EvolveOptions& options) {
  std::vector<double> sorted(times.begin(), times.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::int64_t> observe;
  for (double t : sorted) observe.push_back(exact_steps(t, tau, "times"));

  ReferenceSolution ref{build_grid(spec.domain, shape), tau, scheme, {}};
  SplitState state = make_split_state(spec.formulation, initial_state(spec, ref.grid));
  run_steps(
      Stepper(ref.grid, scheme, tau, binding_of(spec)), state, observe.empty() ? 0 : observe.back(), observe,
      [&](std::int64_t, const SplitState& s) { ref.snapshots.push_back(uv_spectra(s)); }, options);
  return ref;
}

H1Error error_h1(const SpectralUV& numerical, const SpectralUV& reference) {
  const Shape& target = reference.u.grid().shape();
  const SpectrumField u = pad(numerical.u, target);
  const SpectrumField v = pad(numerical.v, target);
  require_same_grid(u.grid(), reference.u.grid());
  const auto d2 = reference.u.grid().delta_squared();
  double su = 0.0;
  double sv = 0.0;
  for (std::size_t l = 0; l < u.size(); ++l) {
    su += d2[l] * std::norm(u[l] - reference.u[l]);
    sv += std::norm(v[l] - reference.v[l]);
  }
  return {std::sqrt(su), std::sqrt(sv)};
}

H1Error error_h1(const StateUV& numerical, const ReferenceSolution& reference, double t) {
  const SpectralUV& ref = reference.at(t);
  return error_h1(SpectralUV{to_spectrum(numerical.u), to_spectrum(numerical.v), numerical.t}, ref);
}

std::string format_number(double value) { return fmt::format("{:.17g}", value); }

std::string format_shape(const Shape& shape) {
  std::string out;
  for (std::size_t a = 0; a < shape.size(); ++a) {
    if (a) out += 'x';
    out += std::to_string(shape[a]);
  }
  return out;
}

void write_error_csv(std::ostream& out, std::span<const ErrorRecord> records) {
  out << kErrorCsvHeader << '\n';
  for (const auto& r : records) {
    out << scheme_name(r.scheme) << ',' << r.p << ',' << format_number(r.eps) << ',' << format_number(r.tau) << ','
        << (r.kappa ? format_number(*r.kappa) : std::string()) << ',' << format_shape(r.n) << ','
        << format_number(r.t) << ',' << format_number(r.e1) << ',' << format_number(r.e1max) << '\n';
  }
}

ConvergenceTable make_convergence_table(std::span<const double> parameters, std::span<const double> errors,
                                        double factor, double floor) {
  if (parameters.size() != errors.size()) throw ValidationError("errors", "one error per parameter is required");
  ConvergenceTable table{factor, std::max(floor, kRoundOffFloor), {}};
  for (std::size_t k = 0; k < errors.size(); ++k) {
    ConvergenceRow row{parameters[k], errors[k], std::nullopt};
    if (k > 0 && errors[k - 1] > table.floor && errors[k] > table.floor) {
      row.order = std::log(errors[k - 1] / errors[k]) / std::log(factor);
    }
    table.rows.push_back(row);
  }
  return table;
}

double fitted_order(const ConvergenceTable& table) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (const auto& row : table.rows) {
    if (!(row.error > table.floor) || !(row.parameter > 0.0)) continue;
    const double x = std::log(row.parameter);
    const double y = std::log(row.error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 2) return std::nan("");
  return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

double round_off_floor(const SpectralUV& reference, std::int64_t steps) {
  const double n = static_cast<double>(std::max<std::int64_t>(steps, 1));
  return std::max(kRoundOffFloor, n * std::numeric_limits<double>::epsilon() * sobolev_norm(reference.u, 1.0));
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

double check_factor(std::span<const double> taus) {
  if (taus.empty()) throw ValidationError("taus", "at least one time step is required");
  for (double tau : taus) {
    if (!(tau > 0.0)) throw ValidationError("taus", "time steps must be positive");
  }
  if (taus.size() == 1) return 2.0;
  const double factor = taus[0] / taus[1];
  if (!(factor > 1.0)) throw ValidationError("taus", "time steps must decrease");
  for (std::size_t k = 1; k < taus.size(); ++k) {
    if (std::abs(taus[k - 1] / taus[k] - factor) > 1e-9 * factor) {
      throw ValidationError("taus", "time steps must decrease by a fixed factor");
    }
  }
  return factor;
}

}  // namespace

TemporalResult temporal_convergence(const ProblemSpec& spec, const Shape& n, SchemeKind scheme,
                                    std::span<const double> taus, double t_eval,
                                    const ReferenceSettings& reference, int jobs, const EvolveOptions& options) {
  check_factor(taus);
  const double tau_min = *std::min_element(taus.begin(), taus.end());
  const auto resolved = resolve(reference, n, tau_min);
  const double times[] = {t_eval};
  const ReferenceSolution ref = compute_reference(spec, times, resolved.shape, resolved.tau, resolved.scheme, options);
  TemporalResult result = temporal_convergence(spec, n, scheme, taus, t_eval, ref, jobs, options);
  if (reference.verify) {
    const ReferenceSolution fine = compute_reference(spec, times, refined(resolved.shape), resolved.tau / 2.0,
                                                     resolved.scheme, options);
    const TemporalResult check = temporal_convergence(spec, n, scheme, taus, t_eval, fine, jobs, options);
    for (std::size_t k = 0; k < result.records.size(); ++k) {
      const double a = result.records[k].e1;
      const double b = check.records[k].e1;
      result.records[k].reference_limited = std::abs(a - b) > reference.tolerance * std::abs(b);
    }
  }
  return result;
}

TemporalResult temporal_convergence(const ProblemSpec& spec, const Shape& n, SchemeKind scheme,
                                    std::span<const double> taus, double t_eval,
                                    const ReferenceSolution& reference, int jobs, const EvolveOptions& options) {
  const double factor = check_factor(taus);
  const SpectralUV& ref = reference.at(t_eval);
  std::vector<double> errors(taus.size());
  parallel_for(taus.size(), jobs, [&](std::size_t k) {
    errors[k] = error_h1(run_to(spec, n, scheme, taus[k], t_eval, options), ref).e1;
  });

  TemporalResult result;
  const double floor = round_off_floor(ref, step_count(t_eval, reference.tau));
  result.table = make_convergence_table(taus, errors, factor, floor);
  result.slope = fitted_order(result.table);
  for (std::size_t k = 0; k < taus.size(); ++k) {
    result.records.push_back(
        {scheme, spec.p, spec.epsilon, taus[k], kappa_of(spec, taus[k]), n, t_eval, errors[k], errors[k], false});
  }
  return result;
}

std::int64_t default_sample_interval(std::int64_t steps) {
  return std::max<std::int64_t>(1, std::llround(static_cast<double>(steps) / 1000.0));
}

namespace {

// Numerical run storing spectra at the scheduled steps, then a streamed
// reference run that measures e1 at the matching reference steps.
std::vector<H1Error> track_errors(const ProblemSpec& spec, const Shape& n, SchemeKind scheme, double tau,
                                  std::span<const std::int64_t> observe, const ResolvedReference& ref,
                                  const EvolveOptions& options) {
  const GridPtr grid = build_grid(spec.domain, n);
  std::vector<SpectralUV> numerical;
  numerical.reserve(observe.size());
  {
    SplitState state = make_split_state(spec.formulation, initial_state(spec, grid));
    run_steps(
        Stepper(grid, scheme, tau, binding_of(spec)), state, observe.back(), observe,
        [&](std::int64_t, const SplitState& s) { numerical.push_back(uv_spectra(s)); }, options);
  }

  const std::int64_t ratio = step_ratio(tau, ref.tau);
  std::vector<std::int64_t> ref_steps;
  for (auto s : observe) ref_steps.push_back(s * ratio);

  const GridPtr ref_grid = build_grid(spec.domain, ref.shape);
  std::vector<H1Error> errors;
  errors.reserve(observe.size());
  SplitState state = make_split_state(spec.formulation, initial_state(spec, ref_grid));
  run_steps(
      Stepper(ref_grid, ref.scheme, ref.tau, binding_of(spec)), state, ref_steps.back(), ref_steps,
      [&](std::int64_t, const SplitState& s) { errors.push_back(error_h1(numerical[errors.size()], uv_spectra(s))); },
      options);
  return errors;
}

}  // namespace

LongtimeResult longtime_sweep(const ProblemSpec& spec, const Shape& n, SchemeKind scheme, double tau,
                              std::span<const double> eps_list, std::optional<std::int64_t> sample_every,
                              const ReferenceSettings& reference, int jobs, const EvolveOptions& options) {
  if (eps_list.empty()) throw ValidationError("eps_list", "at least one epsilon is required");
  LongtimeResult result;
  result.runs.resize(eps_list.size());
  const auto resolved = resolve(reference, n, tau);

  parallel_for(eps_list.size(), jobs, [&](std::size_t k) {
    const ProblemSpec run_spec = spec.with_epsilon(eps_list[k]);
    LongtimeRun& run = result.runs[k];
    run.eps = eps_list[k];
    run.t_final = run_spec.horizon();
    const std::int64_t steps = step_count(run.t_final, tau);
    run.sample_every = sample_every.value_or(default_sample_interval(steps));
    if (run.sample_every < 1) throw ValidationError("sample_every", "sampling interval must be at least one step");

    std::vector<std::int64_t> observe;
    for (std::int64_t s = 0; s <= steps; s += run.sample_every) observe.push_back(s);
    if (observe.back() != steps) observe.push_back(steps);

    const auto errors = track_errors(run_spec, n, scheme, tau, observe, resolved, options);
    std::vector<H1Error> check;
    if (reference.verify) {
      check = track_errors(run_spec, n, scheme, tau, observe,
                           {refined(resolved.shape), resolved.tau / 2.0, resolved.scheme}, options);
    }
    double running = 0.0;
    for (std::size_t i = 0; i < observe.size(); ++i) {
      running = std::max(running, errors[i].e1);
      const double t = static_cast<double>(observe[i]) * tau;
      ErrorRecord rec{scheme, run_spec.p, run_spec.epsilon, tau, kappa_of(run_spec, tau), n, t, errors[i].e1, running,
                      false};
      if (!check.empty()) {
        rec.reference_limited = std::abs(errors[i].e1 - check[i].e1) > reference.tolerance * std::abs(check[i].e1);
      }
      run.records.push_back(rec);
    }
    run.final_e1max = running;
  });

  for (std::size_t k = 1; k < result.runs.size(); ++k) {
    result.ratios.push_back(result.runs[k - 1].final_e1max / result.runs[k].final_e1max);
  }
  return result;
}

Table1Result table1_experiment(const ProblemSpec& spec, const Shape& n, double kappa0, double eps0, int levels,
                               const ReferenceSettings& reference, int jobs, const EvolveOptions& options) {
  if (spec.regime.kind != RegimeKind::Oscillatory) {
    throw ValidationError("preset", "the table experiment needs an oscillatory problem");
  }
  if (levels < 1) throw ValidationError("levels", "levels must be at least 1");
  if (!(kappa0 > 0.0)) throw ValidationError("kappa0", "kappa0 must be positive");
  if (!(eps0 > 0.0 && eps0 <= 1.0)) throw ValidationError("eps0", "epsilon must lie in (0,1]");

  Table1Result result;
  const auto size = static_cast<std::size_t>(levels);
  for (int i = 0; i < levels; ++i) result.eps.push_back(eps0 / std::pow(2.0, i));
  for (int j = 0; j < levels; ++j) result.kappa.push_back(kappa0 / std::pow(4.0, j));
  result.errors.assign(size, std::vector<double>(size, 0.0));
  std::vector<std::vector<bool>> limited(size, std::vector<bool>(size, false));
  std::vector<double> horizons(size);
  std::vector<std::vector<double>> taus(size);
  std::vector<double> floors(size);

  parallel_for(size, jobs, [&](std::size_t i) {
    const ProblemSpec row = spec.with_epsilon(result.eps[i]);
    for (double kappa : result.kappa) taus[i].push_back(rescale_oscillatory(row, kappa).tau);
    horizons[i] = rescale_oscillatory(row, kappa0).t_final;
    const auto resolved = resolve(reference, n, taus[i].back());
    const double times[] = {horizons[i]};
    const ReferenceSolution ref =
        compute_reference(row, times, resolved.shape, resolved.tau, resolved.scheme, options);
    floors[i] = round_off_floor(ref.at(horizons[i]), step_count(horizons[i], resolved.tau));
    std::optional<ReferenceSolution> fine;
    if (reference.verify) {
      fine = compute_reference(row, times, refined(resolved.shape), resolved.tau / 2.0, resolved.scheme, options);
    }
    for (std::size_t j = 0; j < size; ++j) {
      const SpectralUV num = run_to(row, n, SchemeKind::Strang2, taus[i][j], horizons[i], options);
      result.errors[i][j] = error_h1(num, ref.at(horizons[i])).e1;
      if (fine) {
        const double b = error_h1(num, fine->at(horizons[i])).e1;
        limited[i][j] = std::abs(result.errors[i][j] - b) > reference.tolerance * std::abs(b);
      }
    }
  });

  for (std::size_t i = 0; i < size; ++i) {
    result.rows.push_back(make_convergence_table(result.kappa, result.errors[i], 4.0, floors[i]));
    for (std::size_t j = 0; j < size; ++j) {
      result.records.push_back({SchemeKind::Strang2, spec.p, result.eps[i], taus[i][j], result.kappa[j], n,
                                horizons[i], result.errors[i][j], result.errors[i][j], limited[i][j]});
    }
  }
  return result;
}

SpatialResult spatial_convergence(const ProblemSpec& spec, SchemeKind scheme, std::span<const int> n_list,
                                  double tau, double t_eval, const ReferenceSettings& reference, int jobs,
                                  const EvolveOptions& options) {
  if (n_list.empty()) throw ValidationError("N_list", "at least one N is required");
  auto shape_of = [&](int n) { return Shape(static_cast<std::size_t>(spec.domain.dims()), n); };
  const int n_max = *std::max_element(n_list.begin(), n_list.end());
  const Shape ref_shape = reference.shape.value_or(default_reference_shape(shape_of(n_max)));
  const double ref_tau = reference.tau.value_or(tau);
  const SchemeKind ref_scheme = reference.tau ? reference.scheme : scheme;
  const double times[] = {t_eval};
  const ReferenceSolution ref = compute_reference(spec, times, ref_shape, ref_tau, ref_scheme, options);

  std::vector<double> errors(n_list.size());
  parallel_for(n_list.size(), jobs, [&](std::size_t k) {
    errors[k] = error_h1(run_to(spec, shape_of(n_list[k]), scheme, tau, t_eval, options), ref.at(t_eval)).e1;
  });

  SpatialResult result;
  std::vector<double> params(n_list.begin(), n_list.end());
  // Parameters grow with refinement; orders use the refinement ratio of consecutive N.
  const double factor = n_list.size() > 1 ? static_cast<double>(n_list[1]) / n_list[0] : 2.0;
  result.table = make_convergence_table(params, errors, factor, round_off_floor(ref.at(t_eval), step_count(t_eval, ref_tau)));
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    result.records.push_back(
        {scheme, spec.p, spec.epsilon, tau, kappa_of(spec, tau), shape_of(n_list[k]), t_eval, errors[k], errors[k],
         false});
  }
  return result;
}

nlohmann::json to_json(const ConvergenceTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"parameter", r.parameter},
                    {"error", r.error},
                    {"order", r.order ? nlohmann::json(*r.order) : nlohmann::json(nullptr)}});
  }
  return {{"factor", table.factor}, {"floor", table.floor}, {"rows", rows}};
}

nlohmann::json to_json(const ErrorRecord& r) {
  return {{"scheme", std::string(scheme_name(r.scheme))},
          {"p", r.p},
          {"eps", r.eps},
          {"tau", r.tau},
          {"kappa", r.kappa ? nlohmann::json(*r.kappa) : nlohmann::json(nullptr)},
          {"N", r.n},
          {"t", r.t},
          {"e1", r.e1},
          {"e1max", r.e1max},
          {"reference_limited", r.reference_limited}};
}

}  // namespace nkge
