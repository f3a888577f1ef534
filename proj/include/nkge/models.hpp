#pragma once

// Klein-Gordon problem definitions and their first-order reformulations.
//
//   u_tt - Laplace(u) + u + eps^{2p} |u|^{2p} u = 0   on a periodic box.
//
// With <D> = sqrt(1 - Laplace) and v = u_t, the real cubic case (p = 1, real
// data) uses psi = u - i <D>^{-1} v; complex data and general p use the pair
// eta_{+-} = u -+ i <D>^{-1} v. Both are stored as spectra.

#include <string>
#include <string_view>
#include <vector>

#include "nkge/spectral.hpp"

namespace nkge {

enum class Formulation { RealCubic, ComplexPower };
enum class RegimeKind { LongTime, Oscillatory };

struct Regime {
  RegimeKind kind = RegimeKind::LongTime;
  /// Fixed horizon in the long-time scaling: runs span t in [0, T / eps^{2p}].
  double T = 1.0;
};

struct InitialData {
  std::string description;
  PointFunction fn;
};

struct ProblemSpec {
  std::string name;
  Domain domain;
  int p = 1;
  /// Nonlinearity strength. Zero is accepted here as the linear limit; run
  /// configurations restrict it to (0, 1].
  double epsilon = 1.0;
  InitialData u0;
  InitialData v0;
  Formulation formulation = Formulation::ComplexPower;
  Regime regime;
  /// Resolution used when a run does not specify one.
  Shape default_shape;

  void validate() const;
  /// eps^{2p}
  double coupling() const;
  /// T / eps^{2p}
  double horizon() const;
  ProblemSpec with_epsilon(double eps) const;
};

/// Names accepted by `preset`.
std::vector<std::string> preset_names();
ProblemSpec preset(std::string_view name);

struct StateUV {
  GridField u;
  GridField v;
  double t = 0.0;
};

/// Displacement and velocity as spectra.
struct SpectralUV {
  SpectrumField u;
  SpectrumField v;
  double t = 0.0;
};

struct StatePsi {
  SpectrumField psi;
  double t = 0.0;
};

struct StateEta {
  SpectrumField plus;
  SpectrumField minus;
  double t = 0.0;
};

/// Sample u0 and v0 at the nodes. RealCubic problems reject complex samples.
StateUV initial_state(const ProblemSpec& spec, const GridPtr& grid);

StatePsi to_psi(const GridField& u0, const GridField& v0);
StateUV recover_uv(const StatePsi& state);
SpectralUV uv_spectra(const StatePsi& state);

StateEta to_eta(const GridField& u0, const GridField& v0);
StateUV recover_uv(const StateEta& state);
SpectralUV uv_spectra(const StateEta& state);

/// G(phi) = (phi + conj(phi))^3 / 8 pointwise.
GridField cubic_nonlinearity(const GridField& psi);
/// f(u) = |u|^{2p} u pointwise.
GridField power_nonlinearity(const GridField& u, int p);

struct OscillatoryStep {
  double tau = 0.0;
  double t_final = 0.0;
};

/// Map the oscillatory time step kappa (in r = eps^{2p} t) to the step tau
/// and horizon of the equivalent long-time run.
OscillatoryStep rescale_oscillatory(const ProblemSpec& spec, double kappa);

struct OscillatoryState {
  GridField nu;
  GridField mu;
  double r = 0.0;
};

/// nu(r) = u(r / eps^{2p}), mu(r) = v(r / eps^{2p}) / eps^{2p}.
OscillatoryState to_oscillatory(const StateUV& state, double eps, int p);

/// Rectangle-rule quadrature of |v|^2 + |grad u|^2 + |u|^2 + eps^{2p}/(p+1) |u|^{2p+2}.
double energy(const StateUV& state, double eps, int p);

}  // namespace nkge
