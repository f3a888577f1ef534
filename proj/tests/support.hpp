#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>

#include "nkge/splitting.hpp"

namespace nkge::test {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

inline Domain unit_circle() { return Domain({0.0, kTwoPi}); }

template <class Space>
void fill_random(Field<Space>& f, std::uint64_t seed, bool real = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (auto& z : f.values()) {
    const double re = dist(rng);
    const double im = real ? 0.0 : dist(rng);
    z = {re, im};
  }
}

inline double max_abs(std::span<const Complex> v) {
  double m = 0.0;
  for (const auto& z : v) m = std::max(m, std::abs(z));
  return m;
}

inline double max_diff(std::span<const Complex> a, std::span<const Complex> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double rel_diff(std::span<const Complex> a, std::span<const Complex> b) {
  return max_diff(a, b) / std::max(max_abs(b), 1e-300);
}

}  // namespace nkge::test
