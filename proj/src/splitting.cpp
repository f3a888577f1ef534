#include "nkge/splitting.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <fmt/format.h>

namespace nkge {
namespace {

double integer_power(double base, int exponent) {
  double r = 1.0;
  for (int k = 0; k < exponent; ++k) r *= base;
  return r;
}

std::vector<Complex> phase_table(const SpectralGrid& grid, double t) {
  std::vector<Complex> table(grid.size());
  const auto delta = grid.delta();
  for (std::size_t l = 0; l < table.size(); ++l) table[l] = std::polar(1.0, t * delta[l]);
  return table;
}

void multiply(std::span<Complex> values, const std::vector<Complex>& phase) {
  for (std::size_t l = 0; l < values.size(); ++l) values[l] *= phase[l];
}

void multiply_conj(std::span<Complex> values, const std::vector<Complex>& phase) {
  for (std::size_t l = 0; l < values.size(); ++l) values[l] *= std::conj(phase[l]);
}

// Largest coefficient magnitude, or infinity if anything is non-finite.
double max_magnitude(std::span<const Complex> values) {
  double m = 0.0;
  for (const auto& c : values) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return HUGE_VAL;
    m = std::max(m, std::abs(c));
  }
  return m;
}

}  // namespace

std::string_view scheme_name(SchemeKind scheme) noexcept {
  switch (scheme) {
    case SchemeKind::Lie1:
      return "lie1";
    case SchemeKind::Strang2:
      return "strang2";
    case SchemeKind::Yoshida4:
      return "yoshida4";
  }
  return "unknown";
}

SchemeKind parse_scheme(std::string_view name) {
  if (name == "lie1" || name == "lie") return SchemeKind::Lie1;
  if (name == "strang2" || name == "strang") return SchemeKind::Strang2;
  if (name == "yoshida4" || name == "yoshida") return SchemeKind::Yoshida4;
  throw ValidationError("scheme", fmt::format("unknown scheme '{}' (expected lie1, strang2 or yoshida4)", name));
}

int scheme_order(SchemeKind scheme) noexcept {
  switch (scheme) {
    case SchemeKind::Lie1:
      return 1;
    case SchemeKind::Strang2:
      return 2;
    case SchemeKind::Yoshida4:
      return 4;
  }
  return 0;
}

double YoshidaWeights::outer() { return 1.0 / (2.0 - std::cbrt(2.0)); }
double YoshidaWeights::inner() { return 1.0 - 2.0 * outer(); }

double NonlinearBinding::coupling() const { return integer_power(eps, 2 * p); }

NonlinearBinding binding_of(const ProblemSpec& spec) { return {spec.formulation, spec.epsilon, spec.p}; }

SplitState make_split_state(Formulation formulation, const StateUV& state) {
  if (formulation == Formulation::RealCubic) {
    StatePsi psi = to_psi(state.u, state.v);
    psi.t = state.t;
    return psi;
  }
  StateEta eta = to_eta(state.u, state.v);
  eta.t = state.t;
  return eta;
}

SpectralUV uv_spectra(const SplitState& state) {
  return std::visit([](const auto& s) { return uv_spectra(s); }, state);
}

StateUV recover_uv(const SplitState& state) {
  return std::visit([](const auto& s) { return recover_uv(s); }, state);
}

double state_time(const SplitState& state) noexcept {
  return std::visit([](const auto& s) { return s.t; }, state);
}

const SpectralGrid& state_grid(const SplitState& state) noexcept {
  if (const auto* psi = std::get_if<StatePsi>(&state)) return psi->psi.grid();
  return std::get<StateEta>(state).plus.grid();
}

StatePsi flow_linear(const StatePsi& state, double dt) { return {linear_phase(state.psi, dt), state.t + dt}; }

StateEta flow_linear(const StateEta& state, double dt) {
  return {linear_phase(state.plus, dt), linear_phase(state.minus, -dt), state.t + dt};
}

StatePsi flow_nonlinear_psi(const StatePsi& state, double dt, double eps) {
  const NonlinearBinding binding{Formulation::RealCubic, eps, 1};
  const double factor = binding.coupling() * dt;
  StatePsi out = state;
  out.t = state.t + dt;
  if (factor == 0.0) return out;
  const SpectrumField g = to_spectrum(cubic_nonlinearity(from_spectrum(state.psi)));
  const auto inv = state.psi.grid().inverse_delta();
  for (std::size_t l = 0; l < out.psi.size(); ++l) out.psi[l] += Complex(0.0, factor * inv[l]) * g[l];
  if (!all_finite(out.psi.values())) throw BlowUpError("nonlinear flow produced non-finite values", 0, out.t);
  return out;
}

StateEta flow_nonlinear_eta(const StateEta& state, double dt, double eps, int p) {
  const NonlinearBinding binding{Formulation::ComplexPower, eps, p};
  const double factor = binding.coupling() * dt;
  StateEta out = state;
  out.t = state.t + dt;
  if (factor == 0.0) return out;
  SpectrumField u(state.plus.grid_ptr());
  for (std::size_t l = 0; l < u.size(); ++l) u[l] = 0.5 * (state.plus[l] + state.minus[l]);
  const SpectrumField f = to_spectrum(power_nonlinearity(from_spectrum(u), p));
  const auto inv = state.plus.grid().inverse_delta();
  for (std::size_t l = 0; l < u.size(); ++l) {
    const Complex k = Complex(0.0, factor * inv[l]) * f[l];
    out.plus[l] += k;
    out.minus[l] -= k;
  }
  if (!all_finite(out.plus.values()) || !all_finite(out.minus.values())) {
    throw BlowUpError("nonlinear flow produced non-finite values", 0, out.t);
  }
  return out;
}

Stepper::Stepper(GridPtr grid, SchemeKind scheme, double tau, NonlinearBinding binding)
    : grid_(std::move(grid)), scheme_(scheme), tau_(tau), binding_(binding) {
  if (!std::isfinite(tau_) || tau_ == 0.0) throw ValidationError("tau", "tau must be finite and non-zero");
  if (binding_.p < 1) throw ValidationError("p", "power index p must be a positive integer");
  if (binding_.formulation == Formulation::RealCubic && binding_.p != 1) {
    throw ValidationError("formulation", "the real cubic formulation requires p = 1");
  }
  switch (scheme_) {
    case SchemeKind::Lie1:
    case SchemeKind::Strang2:
      stages_.push_back({tau_, phase_table(*grid_, tau_ / 2.0)});
      break;
    case SchemeKind::Yoshida4: {
      const double outer = YoshidaWeights::outer() * tau_;
      const double inner = YoshidaWeights::inner() * tau_;
      stages_.push_back({outer, phase_table(*grid_, outer / 2.0)});
      stages_.push_back({inner, phase_table(*grid_, inner / 2.0)});
      stages_.push_back(stages_.front());
      break;
    }
  }
  full_phase_ = phase_table(*grid_, tau_);
}

void Stepper::kick_psi(std::span<Complex> psi, double dt, StepWorkspace& ws) const {
  const double factor = binding_.coupling() * dt;
  if (factor == 0.0) return;
  auto samples = ws.samples();
  auto scratch = ws.scratch();
  grid_->backward(psi, samples);
  for (auto& z : samples) {
    // G(phi) = (phi + conj(phi))^3 / 8 = Re(phi)^3
    const double re = z.real();
    z = re * re * re;
  }
  grid_->forward(samples, scratch);
  const auto inv = grid_->inverse_delta();
  for (std::size_t l = 0; l < psi.size(); ++l) psi[l] += Complex(0.0, factor * inv[l]) * scratch[l];
}

void Stepper::kick_eta(std::span<Complex> plus, std::span<Complex> minus, double dt, StepWorkspace& ws) const {
  const double factor = binding_.coupling() * dt;
  if (factor == 0.0) return;
  auto samples = ws.samples();
  auto scratch = ws.scratch();
  for (std::size_t l = 0; l < plus.size(); ++l) scratch[l] = 0.5 * (plus[l] + minus[l]);
  grid_->backward(scratch, samples);
  const int p = binding_.p;
  for (auto& z : samples) z *= integer_power(std::norm(z), p);
  grid_->forward(samples, scratch);
  const auto inv = grid_->inverse_delta();
  for (std::size_t l = 0; l < plus.size(); ++l) {
    const Complex k = Complex(0.0, factor * inv[l]) * scratch[l];
    plus[l] += k;
    minus[l] -= k;
  }
}

void Stepper::strang(std::span<Complex> psi, const Stage& stage, StepWorkspace& ws) const {
  multiply(psi, stage.half_phase);
  kick_psi(psi, stage.dt, ws);
  multiply(psi, stage.half_phase);
}

void Stepper::strang(std::span<Complex> plus, std::span<Complex> minus, const Stage& stage,
                     StepWorkspace& ws) const {
  multiply(plus, stage.half_phase);
  multiply_conj(minus, stage.half_phase);
  kick_eta(plus, minus, stage.dt, ws);
  multiply(plus, stage.half_phase);
  multiply_conj(minus, stage.half_phase);
}

void Stepper::advance(StatePsi& state, StepWorkspace& ws) const {
  require_same_grid(state.psi.grid(), *grid_);
  auto psi = state.psi.values();
  if (scheme_ == SchemeKind::Lie1) {
    multiply(psi, full_phase_);
    kick_psi(psi, tau_, ws);
  } else {
    for (const auto& stage : stages_) strang(psi, stage, ws);
  }
  state.t += tau_;
}

void Stepper::advance(StateEta& state, StepWorkspace& ws) const {
  require_same_grid(state.plus.grid(), *grid_);
  require_same_grid(state.minus.grid(), *grid_);
  auto plus = state.plus.values();
  auto minus = state.minus.values();
  if (scheme_ == SchemeKind::Lie1) {
    multiply(plus, full_phase_);
    multiply_conj(minus, full_phase_);
    kick_eta(plus, minus, tau_, ws);
  } else {
    for (const auto& stage : stages_) strang(plus, minus, stage, ws);
  }
  state.t += tau_;
}

void Stepper::advance(SplitState& state, StepWorkspace& ws) const {
  std::visit([&](auto& s) { advance(s, ws); }, state);
}

void Stepper::half_phase(SplitState& state) const {
  const auto& table = stages_.front().half_phase;
  if (auto* psi = std::get_if<StatePsi>(&state)) {
    multiply(psi->psi.values(), table);
  } else {
    auto& eta = std::get<StateEta>(state);
    multiply(eta.plus.values(), table);
    multiply_conj(eta.minus.values(), table);
  }
}

void Stepper::full_phase(SplitState& state) const {
  if (auto* psi = std::get_if<StatePsi>(&state)) {
    multiply(psi->psi.values(), full_phase_);
  } else {
    auto& eta = std::get<StateEta>(state);
    multiply(eta.plus.values(), full_phase_);
    multiply_conj(eta.minus.values(), full_phase_);
  }
}

void Stepper::kick(SplitState& state, StepWorkspace& ws) const {
  if (auto* psi = std::get_if<StatePsi>(&state)) {
    kick_psi(psi->psi.values(), tau_, ws);
  } else {
    auto& eta = std::get<StateEta>(state);
    kick_eta(eta.plus.values(), eta.minus.values(), tau_, ws);
  }
}

SplitState step(const Stepper& stepper, const SplitState& state) {
  SplitState out = state;
  StepWorkspace ws(stepper.grid().size());
  stepper.advance(out, ws);
  return out;
}

namespace {

void set_time(SplitState& state, double t) {
  std::visit([t](auto& s) { s.t = t; }, state);
}

void check_blow_up(const SplitState& state, std::int64_t step, double t) {
  double m = 0.0;
  if (const auto* psi = std::get_if<StatePsi>(&state)) {
    m = max_magnitude(psi->psi.values());
  } else {
    const auto& eta = std::get<StateEta>(state);
    m = std::max(max_magnitude(eta.plus.values()), max_magnitude(eta.minus.values()));
  }
  if (!(m <= kBlowUpThreshold)) {
    throw BlowUpError(fmt::format("solution blew up at step {} (t_n = {:.17g}): max |coefficient| = {:.6g}", step, t, m),
                      step, t);
  }
}

}  // namespace

void run_steps(const Stepper& stepper, SplitState& state, std::int64_t steps,
               std::span<const std::int64_t> observe_steps, const StepObserver& observer,
               const EvolveOptions& options) {
  if (steps < 0) throw ValidationError("steps", "step count must be non-negative");
  if (steps > options.max_steps) {
    throw BudgetExceededError(fmt::format("run needs {} steps but the budget allows {}", steps, options.max_steps));
  }
  const auto start = std::chrono::steady_clock::now();
  const double tau = stepper.tau();
  const double t0 = state_time(state);
  auto next = observe_steps.begin();
  auto notify = [&](std::int64_t n) {
    while (next != observe_steps.end() && *next < n) ++next;
    while (next != observe_steps.end() && *next == n) {
      if (observer) observer(n, state);
      ++next;
    }
  };
  auto check_budget = [&](std::int64_t n) {
    if (options.max_seconds > 0.0 && (n & 255) == 0) {
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      if (elapsed.count() > options.max_seconds) {
        throw BudgetExceededError(
            fmt::format("wall-time budget of {} s exceeded at step {} of {}", options.max_seconds, n, steps));
      }
    }
  };

  notify(0);
  if (steps == 0) return;

  StepWorkspace ws(stepper.grid().size());
  const bool fused = options.fuse_half_steps && stepper.scheme() == SchemeKind::Strang2;
  if (!fused) {
    for (std::int64_t n = 1; n <= steps; ++n) {
      stepper.advance(state, ws);
      const double t = t0 + static_cast<double>(n) * tau;
      set_time(state, t);
      check_blow_up(state, n, t);
      notify(n);
      check_budget(n);
    }
    return;
  }

  stepper.half_phase(state);
  for (std::int64_t n = 1; n <= steps; ++n) {
    stepper.kick(state, ws);
    const double t = t0 + static_cast<double>(n) * tau;
    set_time(state, t);
    const bool observed = std::binary_search(observe_steps.begin(), observe_steps.end(), n);
    if (observed || n == steps) {
      stepper.half_phase(state);
      check_blow_up(state, n, t);
      notify(n);
      if (n < steps) stepper.half_phase(state);
    } else {
      stepper.full_phase(state);
      check_blow_up(state, n, t);
    }
    check_budget(n);
  }
}

std::int64_t step_count(double t, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("tau", "tau must be positive");
  if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("t_final", "times must be finite and non-negative");
  return std::llround(t / tau);
}

Trajectory evolve(const ProblemSpec& spec, const GridPtr& grid, SchemeKind scheme, double tau, double t_final,
                  std::span<const double> snapshot_times, const EvolveOptions& options) {
  const std::int64_t steps = step_count(t_final, tau);
  std::vector<std::pair<std::int64_t, double>> requested;
  for (double t : snapshot_times) {
    const std::int64_t n = step_count(t, tau);
    if (n > steps) throw ValidationError("snapshot_times", fmt::format("snapshot time {} lies beyond t_final", t));
    requested.emplace_back(n, t);
  }
  std::sort(requested.begin(), requested.end());
  std::vector<std::int64_t> observe;
  for (const auto& r : requested) observe.push_back(r.first);

  const Stepper stepper(grid, scheme, tau, binding_of(spec));
  Trajectory out{{}, make_split_state(spec.formulation, initial_state(spec, grid)), steps};
  std::size_t cursor = 0;
  run_steps(
      stepper, out.final_state, steps, observe,
      [&](std::int64_t n, const SplitState& state) {
        out.snapshots.push_back({requested[cursor].second, n, recover_uv(state)});
        ++cursor;
      },
      options);
  return out;
}

}  // namespace nkge
