#include "nkge/models.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace nkge {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double integer_power(double base, int exponent) {
  double r = 1.0;
  for (int k = 0; k < exponent; ++k) r *= base;
  return r;
}

}  // namespace

void ProblemSpec::validate() const {
  if (p < 1) throw ValidationError("p", "power index p must be a positive integer");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ValidationError("eps", "epsilon must lie in (0,1]");
  if (!(regime.T > 0.0) || !std::isfinite(regime.T)) throw ValidationError("T", "T must be positive");
  if (formulation == Formulation::RealCubic && p != 1) {
    throw ValidationError("formulation", "the real cubic formulation requires p = 1");
  }
  if (!u0.fn || !v0.fn) throw ValidationError("initial_data", "initial data u0 and v0 must be provided");
}

double ProblemSpec::coupling() const { return integer_power(epsilon, 2 * p); }

double ProblemSpec::horizon() const { return regime.T / coupling(); }

ProblemSpec ProblemSpec::with_epsilon(double eps) const {
  ProblemSpec copy = *this;
  copy.epsilon = eps;
  copy.validate();
  return copy;
}

std::vector<std::string> preset_names() { return {"longtime-1d-p2", "longtime-2d-p1", "osc-1d-p1"}; }

ProblemSpec preset(std::string_view name) {
  if (name == "longtime-1d-p2") {
    return ProblemSpec{
        .name = std::string(name),
        .domain = Domain({0.0, kTwoPi}),
        .p = 2,
        .epsilon = 1.0,
        .u0 = {"3/(2+cos(x)^2)",
               [](double x, double) {
                 const double c = std::cos(x);
                 return Complex(3.0 / (2.0 + c * c));
               }},
        .v0 = {"3/(4+cos(x)^2)",
               [](double x, double) {
                 const double c = std::cos(x);
                 return Complex(3.0 / (4.0 + c * c));
               }},
        .formulation = Formulation::ComplexPower,
        .regime = {RegimeKind::LongTime, 1.0},
        .default_shape = {64},
    };
  }
  if (name == "longtime-2d-p1") {
    return ProblemSpec{
        .name = std::string(name),
        .domain = Domain({0.0, 1.0}, {0.0, kTwoPi}),
        .p = 1,
        .epsilon = 1.0,
        .u0 = {"2/(1+cos(2*pi*x+y)^2)",
               [](double x, double y) {
                 const double c = std::cos(kTwoPi * x + y);
                 return Complex(2.0 / (1.0 + c * c));
               }},
        .v0 = {"3/(2+2*cos(2*pi*x+y)^2)",
               [](double x, double y) {
                 const double c = std::cos(kTwoPi * x + y);
                 return Complex(3.0 / (2.0 + 2.0 * c * c));
               }},
        .formulation = Formulation::RealCubic,
        .regime = {RegimeKind::LongTime, 1.0},
        .default_shape = {32, 32},
    };
  }
  if (name == "osc-1d-p1") {
    return ProblemSpec{
        .name = std::string(name),
        .domain = Domain({0.0, 1.0}),
        .p = 1,
        .epsilon = 1.0,
        .u0 = {"x^2*(x-1)^2+3", [](double x, double) { return Complex(x * x * (x - 1.0) * (x - 1.0) + 3.0); }},
        .v0 = {"x*(x-1)*(2*x-1)+3*i*cos(2*pi*x)",
               [](double x, double) {
                 return Complex(x * (x - 1.0) * (2.0 * x - 1.0), 3.0 * std::cos(kTwoPi * x));
               }},
        .formulation = Formulation::ComplexPower,
        .regime = {RegimeKind::Oscillatory, 1.0},
        .default_shape = {128},
    };
  }
  throw UnknownPresetError(fmt::format("unknown preset '{}'", name));
}

StateUV initial_state(const ProblemSpec& spec, const GridPtr& grid) {
  spec.validate();
  if (!(grid->domain() == spec.domain)) throw GridMismatchError("grid domain differs from the problem domain");
  StateUV state{sample(grid, spec.u0.fn), sample(grid, spec.v0.fn), 0.0};
  if (!all_finite(state.u.values()) || !all_finite(state.v.values())) {
    throw NonFiniteFieldError("initial data is not finite at every node");
  }
  if (spec.formulation == Formulation::RealCubic) {
    for (std::size_t i = 0; i < state.u.size(); ++i) {
      if (state.u[i].imag() != 0.0 || state.v[i].imag() != 0.0) {
        throw ValidationError("initial_data", "the real cubic formulation requires real initial data");
      }
    }
  }
  return state;
}

StatePsi to_psi(const GridField& u0, const GridField& v0) {
  require_same_grid(u0.grid(), v0.grid());
  const SpectrumField u = to_spectrum(u0);
  const SpectrumField v = to_spectrum(v0);
  const auto inv = u.grid().inverse_delta();
  SpectrumField psi(u.grid_ptr());
  const Complex minus_i(0.0, -1.0);
  for (std::size_t l = 0; l < psi.size(); ++l) psi[l] = u[l] + minus_i * v[l] * inv[l];
  return {std::move(psi), 0.0};
}

SpectralUV uv_spectra(const StatePsi& state) {
  const SpectrumField conj = conjugate_spectrum(state.psi);
  const auto delta = state.psi.grid().delta();
  SpectrumField u(state.psi.grid_ptr());
  SpectrumField v(state.psi.grid_ptr());
  const Complex half_i(0.0, 0.5);
  for (std::size_t l = 0; l < u.size(); ++l) {
    u[l] = 0.5 * (state.psi[l] + conj[l]);
    v[l] = half_i * delta[l] * (state.psi[l] - conj[l]);
  }
  return {std::move(u), std::move(v), state.t};
}

StateUV recover_uv(const StatePsi& state) {
  const SpectralUV s = uv_spectra(state);
  return {from_spectrum(s.u), from_spectrum(s.v), state.t};
}

StateEta to_eta(const GridField& u0, const GridField& v0) {
  require_same_grid(u0.grid(), v0.grid());
  const SpectrumField u = to_spectrum(u0);
  const SpectrumField v = to_spectrum(v0);
  const auto inv = u.grid().inverse_delta();
  SpectrumField plus(u.grid_ptr());
  SpectrumField minus(u.grid_ptr());
  const Complex i(0.0, 1.0);
  for (std::size_t l = 0; l < plus.size(); ++l) {
    plus[l] = u[l] - i * v[l] * inv[l];
    minus[l] = u[l] + i * v[l] * inv[l];
  }
  return {std::move(plus), std::move(minus), 0.0};
}

SpectralUV uv_spectra(const StateEta& state) {
  require_same_grid(state.plus.grid(), state.minus.grid());
  const auto delta = state.plus.grid().delta();
  SpectrumField u(state.plus.grid_ptr());
  SpectrumField v(state.plus.grid_ptr());
  const Complex half_i(0.0, 0.5);
  for (std::size_t l = 0; l < u.size(); ++l) {
    u[l] = 0.5 * (state.plus[l] + state.minus[l]);
    v[l] = half_i * delta[l] * (state.plus[l] - state.minus[l]);
  }
  return {std::move(u), std::move(v), state.t};
}

StateUV recover_uv(const StateEta& state) {
  const SpectralUV s = uv_spectra(state);
  return {from_spectrum(s.u), from_spectrum(s.v), state.t};
}

GridField cubic_nonlinearity(const GridField& psi) {
  GridField out(psi.grid_ptr());
  for (std::size_t j = 0; j < psi.size(); ++j) {
    const Complex s = psi[j] + std::conj(psi[j]);
    out[j] = s * s * s / 8.0;
  }
  return out;
}

GridField power_nonlinearity(const GridField& u, int p) {
  if (p < 1) throw ValidationError("p", "power index p must be a positive integer");
  GridField out(u.grid_ptr());
  for (std::size_t j = 0; j < u.size(); ++j) out[j] = integer_power(std::norm(u[j]), p) * u[j];
  return out;
}

OscillatoryStep rescale_oscillatory(const ProblemSpec& spec, double kappa) {
  if (spec.regime.kind != RegimeKind::Oscillatory) {
    throw ValidationError("regime", "rescale_oscillatory requires an oscillatory problem");
  }
  if (!(kappa > 0.0)) throw ValidationError("kappa", "kappa must be positive");
  const double c = spec.coupling();
  if (!(c > 0.0)) throw ValidationError("eps", "epsilon must lie in (0,1]");
  return {kappa / c, spec.regime.T / c};
}

OscillatoryState to_oscillatory(const StateUV& state, double eps, int p) {
  const double c = integer_power(eps, 2 * p);
  GridField mu = state.v;
  for (auto& z : mu.values()) z /= c;
  return {state.u, std::move(mu), state.t * c};
}

double energy(const StateUV& state, double eps, int p) {
  require_same_grid(state.u.grid(), state.v.grid());
  const auto& grid = state.u.grid();
  const SpectrumField u_hat = to_spectrum(state.u);
  double gradient = 0.0;
  SpectrumField du(state.u.grid_ptr());
  for (int axis = 0; axis < grid.dims(); ++axis) {
    const int n_last = grid.points(grid.dims() - 1);
    for (std::size_t l = 0; l < du.size(); ++l) {
      const int k = grid.dims() == 1 ? static_cast<int>(l)
                                     : (axis == 0 ? static_cast<int>(l) / n_last : static_cast<int>(l) % n_last);
      du[l] = Complex(0.0, grid.frequency(axis, k)) * u_hat[l];
    }
    const GridField g = from_spectrum(du);
    for (const auto& z : g.values()) gradient += std::norm(z);
  }
  const double weight = integer_power(eps, 2 * p) / (p + 1);
  double sum = gradient;
  for (std::size_t j = 0; j < state.u.size(); ++j) {
    const double u2 = std::norm(state.u[j]);
    sum += std::norm(state.v[j]) + u2 + weight * integer_power(u2, p + 1);
  }
  return sum * grid.cell_volume();
}

}  // namespace nkge
