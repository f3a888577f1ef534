#include "nkge/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include <fmt/format.h>

namespace nkge {
namespace {

// FFTW planning is not thread-safe; execution with the new-array API is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }
fftw_complex* as_fftw(const Complex* p) { return reinterpret_cast<fftw_complex*>(const_cast<Complex*>(p)); }

bool is_aligned(const Complex* p) {
  return fftw_alignment_of(reinterpret_cast<double*>(const_cast<Complex*>(p))) == 0;
}

}  // namespace

Domain::Domain(Interval x) : axes_{x} {
  if (!(std::isfinite(x.lower) && std::isfinite(x.upper) && x.length() > 0.0)) {
    throw ValidationError("domain", "domain bounds must be finite with a < b");
  }
}

Domain::Domain(Interval x, Interval y) : axes_{x, y} {
  for (const auto& a : axes_) {
    if (!(std::isfinite(a.lower) && std::isfinite(a.upper) && a.length() > 0.0)) {
      throw ValidationError("domain", "domain bounds must be finite with a < b");
    }
  }
}

double Domain::measure() const noexcept {
  double m = 1.0;
  for (const auto& a : axes_) m *= a.length();
  return m;
}

struct SpectralGrid::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  fftw_plan forward_unaligned = nullptr;
  fftw_plan backward_unaligned = nullptr;

  Plans(const Shape& shape, std::size_t size) {
    ComplexBuffer a(size), b(size);
    std::lock_guard lock(planner_mutex());
    const int rank = static_cast<int>(shape.size());
    const unsigned flags = FFTW_ESTIMATE;
    forward = fftw_plan_dft(rank, shape.data(), as_fftw(a.data()), as_fftw(b.data()), FFTW_FORWARD, flags);
    backward = fftw_plan_dft(rank, shape.data(), as_fftw(a.data()), as_fftw(b.data()), FFTW_BACKWARD, flags);
    forward_unaligned = fftw_plan_dft(rank, shape.data(), as_fftw(a.data()), as_fftw(b.data()), FFTW_FORWARD,
                                      flags | FFTW_UNALIGNED);
    backward_unaligned = fftw_plan_dft(rank, shape.data(), as_fftw(a.data()), as_fftw(b.data()), FFTW_BACKWARD,
                                       flags | FFTW_UNALIGNED);
    if (!forward || !backward || !forward_unaligned || !backward_unaligned) {
      throw InvalidGridError("FFTW failed to create a transform plan");
    }
  }

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    for (fftw_plan p : {forward, backward, forward_unaligned, backward_unaligned}) {
      if (p) fftw_destroy_plan(p);
    }
  }
};

SpectralGrid::SpectralGrid(const Domain& domain, Shape shape) : domain_(domain), shape_(std::move(shape)) {
  if (static_cast<int>(shape_.size()) != domain_.dims()) {
    throw InvalidGridError(fmt::format("grid shape has {} axes but the domain has {}", shape_.size(), domain_.dims()));
  }
  size_ = 1;
  for (int n : shape_) {
    if (n < 4 || n % 2 != 0) {
      throw InvalidGridError(fmt::format("N must be even and at least 4 (got {})", n));
    }
    size_ *= static_cast<std::size_t>(n);
  }

  wavenumbers_.resize(shape_.size());
  std::vector<std::vector<double>> mu2(shape_.size());
  for (std::size_t a = 0; a < shape_.size(); ++a) {
    const int n = shape_[a];
    const double scale = 2.0 * std::numbers::pi / domain_.axis(static_cast<int>(a)).length();
    wavenumbers_[a].resize(static_cast<std::size_t>(n));
    mu2[a].resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const int l = k < n / 2 ? k : k - n;
      wavenumbers_[a][static_cast<std::size_t>(k)] = l;
      const double mu = scale * l;
      mu2[a][static_cast<std::size_t>(k)] = mu * mu;
    }
  }

  frequency_squared_.resize(size_);
  if (shape_.size() == 1) {
    std::copy(mu2[0].begin(), mu2[0].end(), frequency_squared_.begin());
  } else {
    const auto n1 = static_cast<std::size_t>(shape_[1]);
    for (std::size_t i = 0; i < size_; ++i) frequency_squared_[i] = mu2[0][i / n1] + mu2[1][i % n1];
  }
  delta_squared_.resize(size_);
  delta_.resize(size_);
  inverse_delta_.resize(size_);
  for (std::size_t i = 0; i < size_; ++i) {
    delta_squared_[i] = 1.0 + frequency_squared_[i];
    delta_[i] = std::sqrt(delta_squared_[i]);
    inverse_delta_[i] = 1.0 / delta_[i];
  }

  plans_ = std::make_unique<Plans>(shape_, size_);
}

SpectralGrid::~SpectralGrid() = default;

double SpectralGrid::spacing(int axis) const { return domain_.axis(axis).length() / points(axis); }

double SpectralGrid::cell_volume() const noexcept {
  double v = 1.0;
  for (int a = 0; a < dims(); ++a) v *= spacing(a);
  return v;
}

double SpectralGrid::node(int axis, int j) const { return domain_.axis(axis).lower + j * spacing(axis); }

int SpectralGrid::wavenumber(int axis, int k) const {
  return wavenumbers_.at(static_cast<std::size_t>(axis)).at(static_cast<std::size_t>(k));
}

double SpectralGrid::frequency(int axis, int k) const {
  return 2.0 * std::numbers::pi * wavenumber(axis, k) / domain_.axis(axis).length();
}

bool SpectralGrid::contains_mode(std::span<const int> modes) const {
  if (modes.size() != shape_.size()) return false;
  for (std::size_t a = 0; a < modes.size(); ++a) {
    const int n = shape_[a];
    if (modes[a] < -n / 2 || modes[a] >= n / 2) return false;
  }
  return true;
}

std::size_t SpectralGrid::mode_offset(std::span<const int> modes) const {
  if (!contains_mode(modes)) {
    throw ResolutionMismatchError("mode index lies outside the grid's index set");
  }
  std::size_t offset = 0;
  for (std::size_t a = 0; a < modes.size(); ++a) {
    const int n = shape_[a];
    const int k = modes[a] >= 0 ? modes[a] : modes[a] + n;
    offset = offset * static_cast<std::size_t>(n) + static_cast<std::size_t>(k);
  }
  return offset;
}

std::size_t SpectralGrid::reflected_offset(std::size_t offset) const {
  if (shape_.size() == 1) {
    const auto n = static_cast<std::size_t>(shape_[0]);
    return (n - offset) % n;
  }
  const auto n0 = static_cast<std::size_t>(shape_[0]);
  const auto n1 = static_cast<std::size_t>(shape_[1]);
  const std::size_t k0 = offset / n1;
  const std::size_t k1 = offset % n1;
  return ((n0 - k0) % n0) * n1 + (n1 - k1) % n1;
}

void SpectralGrid::forward(std::span<const Complex> samples, std::span<Complex> coefficients) const {
  if (samples.size() != size_ || coefficients.size() != size_) {
    throw GridMismatchError("transform buffer size does not match the grid");
  }
  const bool aligned = is_aligned(samples.data()) && is_aligned(coefficients.data());
  fftw_execute_dft(aligned ? plans_->forward : plans_->forward_unaligned, as_fftw(samples.data()),
                   as_fftw(coefficients.data()));
  const double scale = 1.0 / static_cast<double>(size_);
  for (auto& c : coefficients) c *= scale;
}

void SpectralGrid::backward(std::span<const Complex> coefficients, std::span<Complex> samples) const {
  if (samples.size() != size_ || coefficients.size() != size_) {
    throw GridMismatchError("transform buffer size does not match the grid");
  }
  const bool aligned = is_aligned(samples.data()) && is_aligned(coefficients.data());
  fftw_execute_dft(aligned ? plans_->backward : plans_->backward_unaligned, as_fftw(coefficients.data()),
                   as_fftw(samples.data()));
}

GridPtr build_grid(const Domain& domain, const Shape& shape) {
  using Key = std::pair<std::vector<double>, Shape>;
  static std::mutex cache_mutex;
  static std::map<Key, std::weak_ptr<const SpectralGrid>> cache;

  std::vector<double> bounds;
  for (int a = 0; a < domain.dims(); ++a) {
    bounds.push_back(domain.axis(a).lower);
    bounds.push_back(domain.axis(a).upper);
  }
  Key key{std::move(bounds), shape};

  std::lock_guard lock(cache_mutex);
  if (auto it = cache.find(key); it != cache.end()) {
    if (auto existing = it->second.lock()) return existing;
  }
  auto grid = std::make_shared<const SpectralGrid>(domain, shape);
  cache[std::move(key)] = grid;
  return grid;
}

GridField sample(const GridPtr& grid, const PointFunction& fn) {
  GridField out(grid);
  if (grid->dims() == 1) {
    for (int j = 0; j < grid->points(0); ++j) out[static_cast<std::size_t>(j)] = fn(grid->node(0, j), 0.0);
  } else {
    const int n1 = grid->points(1);
    for (int j0 = 0; j0 < grid->points(0); ++j0) {
      for (int j1 = 0; j1 < n1; ++j1) {
        out[static_cast<std::size_t>(j0) * n1 + j1] = fn(grid->node(0, j0), grid->node(1, j1));
      }
    }
  }
  return out;
}

bool all_finite(std::span<const Complex> values) noexcept {
  return std::all_of(values.begin(), values.end(),
                     [](const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

void require_same_grid(const SpectralGrid& a, const SpectralGrid& b) {
  if (&a == &b) return;
  if (!(a.domain() == b.domain() && a.shape() == b.shape())) {
    throw GridMismatchError("fields live on different grids");
  }
}

SpectrumField to_spectrum(const GridField& field) {
  if (!all_finite(field.values())) throw NonFiniteFieldError("field contains NaN or Inf samples");
  SpectrumField out(field.grid_ptr());
  field.grid().forward(field.values(), out.values());
  return out;
}

GridField from_spectrum(const SpectrumField& spectrum) {
  if (!all_finite(spectrum.values())) throw NonFiniteFieldError("spectrum contains NaN or Inf coefficients");
  GridField out(spectrum.grid_ptr());
  spectrum.grid().backward(spectrum.values(), out.values());
  return out;
}

SpectrumField apply_bessel(const SpectrumField& spectrum, double exponent) {
  SpectrumField out = spectrum;
  if (exponent == 0.0) return out;
  const auto& grid = spectrum.grid();
  auto v = out.values();
  if (exponent == 1.0) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= grid.delta()[i];
  } else if (exponent == -1.0) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= grid.inverse_delta()[i];
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= std::pow(grid.delta()[i], exponent);
  }
  return out;
}

SpectrumField linear_phase(const SpectrumField& spectrum, double t) {
  SpectrumField out = spectrum;
  if (t == 0.0) return out;
  const auto delta = spectrum.grid().delta();
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= std::polar(1.0, t * delta[i]);
  return out;
}

double sobolev_norm(const SpectrumField& spectrum, double m) {
  const auto d2 = spectrum.grid().delta_squared();
  const auto v = spectrum.values();
  double sum = 0.0;
  if (m == 0.0) {
    for (const auto& c : v) sum += std::norm(c);
  } else if (m == 1.0) {
    for (std::size_t i = 0; i < v.size(); ++i) sum += d2[i] * std::norm(v[i]);
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) sum += std::pow(d2[i], m) * std::norm(v[i]);
  }
  return std::sqrt(sum);
}

namespace {

void check_shape(const SpectralGrid& grid, const Shape& target, bool coarser) {
  if (target.size() != grid.shape().size()) {
    throw ResolutionMismatchError("target shape has the wrong number of axes");
  }
  for (std::size_t a = 0; a < target.size(); ++a) {
    const int n = target[a];
    if (n < 4 || n % 2 != 0) throw ResolutionMismatchError(fmt::format("target N = {} is not even and >= 4", n));
    if (coarser ? n > grid.shape()[a] : n < grid.shape()[a]) {
      throw ResolutionMismatchError(fmt::format("cannot {} N = {} to N = {}", coarser ? "project" : "pad",
                                                grid.shape()[a], n));
    }
  }
}

// Copy every mode shared by `from` and `to` (the smaller index set).
void copy_common_modes(const SpectrumField& from, SpectrumField& to) {
  const auto& small = from.size() <= to.size() ? from.grid() : to.grid();
  const auto& src = from.grid();
  const auto& dst = to.grid();
  if (small.dims() == 1) {
    for (int k = 0; k < small.points(0); ++k) {
      const int l[1] = {small.wavenumber(0, k)};
      to[dst.mode_offset(l)] = from[src.mode_offset(l)];
    }
    return;
  }
  for (int k0 = 0; k0 < small.points(0); ++k0) {
    for (int k1 = 0; k1 < small.points(1); ++k1) {
      const int l[2] = {small.wavenumber(0, k0), small.wavenumber(1, k1)};
      to[dst.mode_offset(l)] = from[src.mode_offset(l)];
    }
  }
}

}  // namespace

SpectrumField project(const SpectrumField& spectrum, const Shape& coarse) {
  check_shape(spectrum.grid(), coarse, true);
  if (coarse == spectrum.grid().shape()) return spectrum;
  SpectrumField out(build_grid(spectrum.grid().domain(), coarse));
  copy_common_modes(spectrum, out);
  return out;
}

SpectrumField pad(const SpectrumField& spectrum, const Shape& fine) {
  check_shape(spectrum.grid(), fine, false);
  if (fine == spectrum.grid().shape()) return spectrum;
  SpectrumField out(build_grid(spectrum.grid().domain(), fine));
  copy_common_modes(spectrum, out);
  return out;
}

SpectrumField conjugate_spectrum(const SpectrumField& spectrum) {
  const auto& grid = spectrum.grid();
  SpectrumField out(spectrum.grid_ptr());
  for (std::size_t i = 0; i < spectrum.size(); ++i) out[i] = std::conj(spectrum[grid.reflected_offset(i)]);
  return out;
}

}  // namespace nkge
