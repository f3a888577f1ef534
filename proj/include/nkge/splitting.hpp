#pragma once

// Time-splitting Fourier pseudospectral steppers.
//
// The linear flow is exact in Fourier space (exp(+-i t delta_l) per mode); the
// nonlinear flow is exact because it leaves u unchanged, so it is a single
// kick psi += i eps^{2p} t <D>^{-1} I_N G(psi) evaluated at the nodes.

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "nkge/models.hpp"

namespace nkge {

enum class SchemeKind { Lie1, Strang2, Yoshida4 };

std::string_view scheme_name(SchemeKind scheme) noexcept;
SchemeKind parse_scheme(std::string_view name);
/// Classical order of accuracy of the scheme.
int scheme_order(SchemeKind scheme) noexcept;

/// Triple-jump weights of the fourth-order composition: gamma1 = gamma3, gamma2 = 1 - 2 gamma1.
struct YoshidaWeights {
  static double outer();
  static double inner();
};

struct NonlinearBinding {
  Formulation formulation = Formulation::ComplexPower;
  double eps = 1.0;
  int p = 1;
  /// eps^{2p}
  double coupling() const;
};

NonlinearBinding binding_of(const ProblemSpec& spec);

using SplitState = std::variant<StatePsi, StateEta>;

/// Convert sampled (u, v) into the formulation's working variable.
SplitState make_split_state(Formulation formulation, const StateUV& state);
SpectralUV uv_spectra(const SplitState& state);
StateUV recover_uv(const SplitState& state);
double state_time(const SplitState& state) noexcept;
const SpectralGrid& state_grid(const SplitState& state) noexcept;

StatePsi flow_linear(const StatePsi& state, double dt);
StateEta flow_linear(const StateEta& state, double dt);
StatePsi flow_nonlinear_psi(const StatePsi& state, double dt, double eps);
StateEta flow_nonlinear_eta(const StateEta& state, double dt, double eps, int p);

/// Scratch buffers for one trajectory. Not shareable between threads.
class StepWorkspace {
 public:
  explicit StepWorkspace(std::size_t size) : samples_(size), scratch_(size) {}
  std::span<Complex> samples() noexcept { return samples_; }
  std::span<Complex> scratch() noexcept { return scratch_; }

 private:
  ComplexBuffer samples_;
  ComplexBuffer scratch_;
};

/// One scheme at a fixed step with its phase multipliers cached.
/// Immutable and shareable; a negative tau integrates backwards.
class Stepper {
 public:
  Stepper(GridPtr grid, SchemeKind scheme, double tau, NonlinearBinding binding);

  SchemeKind scheme() const noexcept { return scheme_; }
  double tau() const noexcept { return tau_; }
  const NonlinearBinding& binding() const noexcept { return binding_; }
  const SpectralGrid& grid() const noexcept { return *grid_; }

  void advance(StatePsi& state, StepWorkspace& ws) const;
  void advance(StateEta& state, StepWorkspace& ws) const;
  void advance(SplitState& state, StepWorkspace& ws) const;

  // Strang pieces for the fused loop: the trailing half phase of one step and
  // the leading half phase of the next are applied as a single full phase.
  void half_phase(SplitState& state) const;
  void full_phase(SplitState& state) const;
  void kick(SplitState& state, StepWorkspace& ws) const;

 private:
  struct Stage {
    double dt = 0.0;
    std::vector<Complex> half_phase;  // exp(i dt delta / 2)
  };

  void strang(std::span<Complex> psi, const Stage& stage, StepWorkspace& ws) const;
  void strang(std::span<Complex> plus, std::span<Complex> minus, const Stage& stage, StepWorkspace& ws) const;
  void kick_psi(std::span<Complex> psi, double dt, StepWorkspace& ws) const;
  void kick_eta(std::span<Complex> plus, std::span<Complex> minus, double dt, StepWorkspace& ws) const;

  GridPtr grid_;
  SchemeKind scheme_;
  double tau_;
  NonlinearBinding binding_;
  std::vector<Stage> stages_;
  std::vector<Complex> full_phase_;  // exp(i tau delta)
};

/// Pure single step.
SplitState step(const Stepper& stepper, const SplitState& state);

/// Coefficient magnitude above which a run is declared blown up.
inline constexpr double kBlowUpThreshold = 1e8;

struct EvolveOptions {
  bool fuse_half_steps = false;
  std::int64_t max_steps = 10'000'000;
  /// Wall-clock budget in seconds; 0 disables it.
  double max_seconds = 0.0;
};

using StepObserver = std::function<void(std::int64_t step, const SplitState& state)>;

/// Advance `steps` steps in place. `observe_steps` must be sorted; the
/// observer sees the state after each listed step (step 0 is the input).
/// State time is set to n * tau.
void run_steps(const Stepper& stepper, SplitState& state, std::int64_t steps,
               std::span<const std::int64_t> observe_steps, const StepObserver& observer,
               const EvolveOptions& options = {});

struct Snapshot {
  double requested_time = 0.0;
  std::int64_t step = 0;
  StateUV state;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  SplitState final_state;
  std::int64_t steps = 0;
};

/// Number of steps of size tau that cover t (nearest integer).
std::int64_t step_count(double t, double tau);

/// Evolve the problem's initial data on `grid`. Snapshot times snap to the
/// nearest step and are returned in ascending order.
Trajectory evolve(const ProblemSpec& spec, const GridPtr& grid, SchemeKind scheme, double tau, double t_final,
                  std::span<const double> snapshot_times, const EvolveOptions& options = {});

}  // namespace nkge
