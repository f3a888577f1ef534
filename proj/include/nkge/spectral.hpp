#pragma once

// Periodic Fourier toolbox: tensor-product grids, normalized discrete
// transforms, Bessel-potential multipliers and discrete Sobolev norms.
//
// Coefficient convention: for N nodes x_j = a + j h,
//   c_l = (1/N) sum_j u_j exp(-i mu_l (x_j - a)),  l in {-N/2, ..., N/2-1},
// with mu_l = 2 pi l / (b - a). Coefficients are stored in FFT order
// (0, 1, ..., N/2-1, -N/2, ..., -1) per axis, row-major across axes.

#include <complex>
#include <concepts>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <fftw3.h>

#include "nkge/errors.hpp"

namespace nkge {

using Complex = std::complex<double>;

/// SIMD-aligned allocation so FFTW can run its aligned codelets on field storage.
template <class T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) {
    void* p = fftw_malloc(n * sizeof(T));
    if (p == nullptr) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { fftw_free(p); }
  template <class U>
  bool operator==(const FftwAllocator<U>&) const noexcept {
    return true;
  }
};

using ComplexBuffer = std::vector<Complex, FftwAllocator<Complex>>;

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double length() const noexcept { return upper - lower; }
  bool operator==(const Interval&) const = default;
};

/// Periodic box of dimension 1 or 2.
class Domain {
 public:
  explicit Domain(Interval x);
  Domain(Interval x, Interval y);

  int dims() const noexcept { return static_cast<int>(axes_.size()); }
  const Interval& axis(int i) const { return axes_.at(static_cast<std::size_t>(i)); }
  /// Product of the side lengths.
  double measure() const noexcept;

  bool operator==(const Domain&) const = default;

 private:
  std::vector<Interval> axes_;
};

/// Points per axis.
using Shape = std::vector<int>;

class SpectralGrid;
using GridPtr = std::shared_ptr<const SpectralGrid>;

/// Uniform periodic grid with tabulated frequencies and Bessel symbols.
/// Immutable after construction; transforms are reentrant.
class SpectralGrid {
 public:
  SpectralGrid(const Domain& domain, Shape shape);
  ~SpectralGrid();
  SpectralGrid(const SpectralGrid&) = delete;
  SpectralGrid& operator=(const SpectralGrid&) = delete;

  const Domain& domain() const noexcept { return domain_; }
  const Shape& shape() const noexcept { return shape_; }
  int dims() const noexcept { return domain_.dims(); }
  std::size_t size() const noexcept { return size_; }
  int points(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }

  double spacing(int axis) const;
  /// Product of the spacings (quadrature weight of the rectangle rule).
  double cell_volume() const noexcept;
  double node(int axis, int j) const;

  /// Signed mode number l of storage slot k along an axis.
  int wavenumber(int axis, int k) const;
  /// mu_l = 2 pi l / (b - a) of storage slot k along an axis.
  double frequency(int axis, int k) const;

  /// Per-coefficient tables in storage order.
  std::span<const double> delta() const noexcept { return delta_; }
  std::span<const double> inverse_delta() const noexcept { return inverse_delta_; }
  std::span<const double> delta_squared() const noexcept { return delta_squared_; }
  /// |mu|^2 per coefficient.
  std::span<const double> frequency_squared() const noexcept { return frequency_squared_; }

  /// Whether every signed index lies in {-N/2, ..., N/2-1} on its axis.
  bool contains_mode(std::span<const int> modes) const;
  /// Flat storage offset of a multi-index mode; throws ResolutionMismatchError if absent.
  std::size_t mode_offset(std::span<const int> modes) const;
  /// Flat offset of the reflected mode -l taken modulo N on each axis.
  std::size_t reflected_offset(std::size_t offset) const;

  /// Normalized forward transform (samples -> coefficients). Buffers must not alias.
  void forward(std::span<const Complex> samples, std::span<Complex> coefficients) const;
  /// Unnormalized inverse (coefficients -> samples). Buffers must not alias.
  void backward(std::span<const Complex> coefficients, std::span<Complex> samples) const;

 private:
  struct Plans;

  Domain domain_;
  Shape shape_;
  std::size_t size_ = 0;
  std::vector<std::vector<int>> wavenumbers_;
  std::vector<double> delta_;
  std::vector<double> inverse_delta_;
  std::vector<double> delta_squared_;
  std::vector<double> frequency_squared_;
  std::unique_ptr<Plans> plans_;
};

/// Build (or fetch a cached) grid. Every N must be even and at least 4.
GridPtr build_grid(const Domain& domain, const Shape& shape);

struct PhysicalSpace {};
struct FourierSpace {};

/// Complex array bound to a grid; `Space` distinguishes node samples from coefficients.
template <class Space>
class Field {
 public:
  explicit Field(GridPtr grid) : grid_(std::move(grid)), values_(grid_->size()) {}
  Field(GridPtr grid, ComplexBuffer values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->size()) {
      throw GridMismatchError("field value count does not match the grid size");
    }
  }

  const SpectralGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<Complex> values() noexcept { return values_; }
  std::span<const Complex> values() const noexcept { return values_; }
  Complex& operator[](std::size_t i) { return values_[i]; }
  const Complex& operator[](std::size_t i) const { return values_[i]; }

  /// Coefficient of signed mode l (1D) or (l0, l1) (2D).
  Complex& mode(std::initializer_list<int> l)
    requires std::same_as<Space, FourierSpace>
  {
    return values_[grid_->mode_offset(std::span<const int>(l.begin(), l.size()))];
  }
  const Complex& mode(std::initializer_list<int> l) const
    requires std::same_as<Space, FourierSpace>
  {
    return values_[grid_->mode_offset(std::span<const int>(l.begin(), l.size()))];
  }

 private:
  GridPtr grid_;
  ComplexBuffer values_;
};

using GridField = Field<PhysicalSpace>;
using SpectrumField = Field<FourierSpace>;

using PointFunction = std::function<Complex(double x, double y)>;

/// Sample a closed-form function at the grid nodes (y is 0 in 1D).
GridField sample(const GridPtr& grid, const PointFunction& fn);

bool all_finite(std::span<const Complex> values) noexcept;
void require_same_grid(const SpectralGrid& a, const SpectralGrid& b);

SpectrumField to_spectrum(const GridField& field);
GridField from_spectrum(const SpectrumField& spectrum);

/// Multiply each coefficient by delta_l^exponent.
SpectrumField apply_bessel(const SpectrumField& spectrum, double exponent);
/// Multiply each coefficient by exp(i t delta_l).
SpectrumField linear_phase(const SpectrumField& spectrum, double t);
/// sqrt(sum_l delta_l^{2m} |c_l|^2) over the stored modes.
double sobolev_norm(const SpectrumField& spectrum, double m);

/// Truncate to the modes of a coarser grid.
SpectrumField project(const SpectrumField& spectrum, const Shape& coarse);
/// Embed into a finer grid, zero-filling the new modes.
SpectrumField pad(const SpectrumField& spectrum, const Shape& fine);

/// Coefficients of the pointwise complex conjugate: conj(c_{-l mod N}).
SpectrumField conjugate_spectrum(const SpectrumField& spectrum);

}  // namespace nkge
