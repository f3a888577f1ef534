#include <catch_amalgamated.hpp>

#include <cmath>
#include <thread>

#include "nkge/models.hpp"
#include "support.hpp"

using namespace nkge;
using nkge::test::kTwoPi;

namespace {

// Direct evaluation of c_l = (1/N) sum_j u_j exp(-2 pi i l . j / N).
std::vector<Complex> naive_dft(const GridField& f) {
  const auto& g = f.grid();
  std::vector<Complex> out(g.size());
  const int n0 = g.points(0);
  const int n1 = g.dims() == 2 ? g.points(1) : 1;
  for (int k0 = 0; k0 < n0; ++k0) {
    for (int k1 = 0; k1 < n1; ++k1) {
      const int l0 = g.wavenumber(0, k0);
      const int l1 = g.dims() == 2 ? g.wavenumber(1, k1) : 0;
      Complex sum = 0.0;
      for (int j0 = 0; j0 < n0; ++j0) {
        for (int j1 = 0; j1 < n1; ++j1) {
          const double phase = -kTwoPi * (static_cast<double>(l0) * j0 / n0 + static_cast<double>(l1) * j1 / n1);
          sum += f[static_cast<std::size_t>(j0 * n1 + j1)] * Complex(std::cos(phase), std::sin(phase));
        }
      }
      out[static_cast<std::size_t>(k0 * n1 + k1)] = sum / static_cast<double>(n0 * n1);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("grid validation", "[spectral]") {
  CHECK_THROWS_AS(build_grid(test::unit_circle(), {7}), InvalidGridError);
  CHECK_THROWS_AS(build_grid(test::unit_circle(), {2}), InvalidGridError);
  CHECK_THROWS_AS(build_grid(test::unit_circle(), {8, 8}), InvalidGridError);
  CHECK_THROWS_AS(Domain({1.0, 1.0}), ValidationError);
  const auto g = build_grid(test::unit_circle(), {8});
  CHECK(g == build_grid(test::unit_circle(), {8}));
}

TEST_CASE("grid frequencies and Bessel symbol", "[spectral]") {
  const auto g = build_grid(Domain({0.0, 1.0}, {0.0, kTwoPi}), {8, 6});
  for (int k = 0; k < 8; ++k) {
    const int l = g->wavenumber(0, k);
    CHECK(l >= -4);
    CHECK(l <= 3);
    CHECK(g->frequency(0, k) == Catch::Approx(kTwoPi * l));
  }
  const std::vector<int> m{-2, 1};
  const auto off = g->mode_offset(m);
  CHECK(g->delta()[off] == Catch::Approx(std::sqrt(1.0 + 4.0 * kTwoPi * kTwoPi + 1.0)));
  const std::vector<int> neg{2, -1};
  CHECK(g->reflected_offset(off) == g->mode_offset(neg));
  for (std::size_t i = 0; i < g->size(); ++i) {
    CHECK(g->delta()[i] >= 1.0);
    CHECK(g->delta()[i] * g->inverse_delta()[i] == Catch::Approx(1.0));
  }
  CHECK(g->delta()[0] == 1.0);
  const std::vector<int> absent{4, 0};
  CHECK_FALSE(g->contains_mode(absent));
  CHECK_THROWS_AS(g->mode_offset(absent), ResolutionMismatchError);
}

TEST_CASE("forward transform matches the direct sum", "[spectral]") {
  for (const Shape& shape : {Shape{12}, Shape{6, 8}}) {
    const auto g = shape.size() == 1 ? build_grid(test::unit_circle(), shape)
                                     : build_grid(Domain({0.0, 1.0}, {0.0, kTwoPi}), shape);
    GridField f(g);
    test::fill_random(f, 11);
    const auto spectrum = to_spectrum(f);
    const auto oracle = naive_dft(f);
    CHECK(test::max_diff(spectrum.values(), oracle) <= 1e-14);
  }
}

TEST_CASE("transform examples", "[spectral]") {
  const auto g8 = build_grid(Domain({-1.0, 3.0}), {8});
  SECTION("constant field") {
    const auto s = to_spectrum(sample(g8, [](double, double) { return Complex(2.5, -1.0); }));
    CHECK(std::abs(s.mode({0}) - Complex(2.5, -1.0)) <= 1e-15);
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(std::abs(s[i]) <= 1e-15);
  }
  SECTION("exact mode") {
    const double mu1 = kTwoPi / 4.0;
    const auto s = to_spectrum(sample(g8, [&](double x, double) { return std::exp(Complex(0.0, mu1 * (x + 1.0))); }));
    CHECK(std::abs(s.mode({1}) - 1.0) <= 1e-15);
    double others = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != g8->mode_offset(std::vector<int>{1})) others = std::max(others, std::abs(s[i]));
    }
    CHECK(others <= 1e-15);
    SpectrumField single(g8);
    single.mode({1}) = 1.0;
    const auto back = from_spectrum(single);
    for (int j = 0; j < 8; ++j) {
      CHECK(std::abs(back[static_cast<std::size_t>(j)] - std::exp(Complex(0.0, mu1 * (g8->node(0, j) + 1.0)))) <=
            1e-15);
    }
  }
  SECTION("sine") {
    const auto g = build_grid(test::unit_circle(), {16});
    const auto s = to_spectrum(sample(g, [](double x, double) { return std::sin(x); }));
    CHECK(std::abs(s.mode({1}) - Complex(0.0, -0.5)) <= 1e-15);
    CHECK(std::abs(s.mode({-1}) - Complex(0.0, 0.5)) <= 1e-15);
    CHECK(sobolev_norm(s, 1.0) == Catch::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("round trips and inverse pairs", "[spectral][property]") {
  for (const Shape& shape : {Shape{4}, Shape{64}, Shape{10}, Shape{8, 12}}) {
    const auto g = shape.size() == 1 ? build_grid(test::unit_circle(), shape)
                                     : build_grid(Domain({0.0, 1.0}, {0.0, kTwoPi}), shape);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      GridField f(g);
      test::fill_random(f, seed);
      CHECK(test::rel_diff(from_spectrum(to_spectrum(f)).values(), f.values()) <= 1e-12);
      SpectrumField s(g);
      test::fill_random(s, seed + 100);
      CHECK(test::rel_diff(to_spectrum(from_spectrum(s)).values(), s.values()) <= 1e-12);
      CHECK(test::rel_diff(apply_bessel(apply_bessel(s, -1.0), 1.0).values(), s.values()) <= 1e-12);
      CHECK(test::max_diff(apply_bessel(s, 0.0).values(), s.values()) == 0.0);
    }
  }
  const auto g = build_grid(test::unit_circle(), {64});
  const auto u0 = sample(g, [](double x, double) { return 3.0 / (2.0 + std::cos(x) * std::cos(x)); });
  CHECK(test::rel_diff(from_spectrum(to_spectrum(u0)).values(), u0.values()) <= 1e-12);
}

TEST_CASE("non-finite input is rejected", "[spectral]") {
  const auto g = build_grid(test::unit_circle(), {8});
  GridField f(g);
  f[3] = std::nan("");
  CHECK_THROWS_AS(to_spectrum(f), NonFiniteFieldError);
}

TEST_CASE("Parseval and reality", "[spectral][property]") {
  const auto g = build_grid(Domain({0.0, 1.0}, {0.0, kTwoPi}), {8, 16});
  GridField f(g);
  test::fill_random(f, 7, /*real=*/true);
  const auto s = to_spectrum(f);
  double sum = 0.0;
  for (const auto& z : f.values()) sum += std::norm(z);
  CHECK(std::pow(sobolev_norm(s, 0.0), 2) == Catch::Approx(sum / static_cast<double>(g->size())).epsilon(1e-12));
  double asym = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    asym = std::max(asym, std::abs(s[g->reflected_offset(i)] - std::conj(s[i])));
  }
  CHECK(asym <= 1e-13);
  const auto back = from_spectrum(s);
  double imag = 0.0;
  for (const auto& z : back.values()) imag = std::max(imag, std::abs(z.imag()));
  CHECK(imag <= 1e-12 * test::max_abs(f.values()));
  CHECK(test::max_diff(conjugate_spectrum(s).values(), s.values()) <= 1e-15);
}

TEST_CASE("Bessel and phase multipliers", "[spectral][property]") {
  const auto g = build_grid(test::unit_circle(), {32});
  SpectrumField s(g);
  test::fill_random(s, 3);
  CHECK(test::max_diff(apply_bessel(apply_bessel(s, 0.5), 1.5).values(), apply_bessel(s, 2.0).values()) <= 1e-12);
  SpectrumField c(g);
  c.mode({0}) = 2.0;
  CHECK(test::max_diff(apply_bessel(c, 1.0).values(), c.values()) == 0.0);
  CHECK(std::abs(linear_phase(c, 0.7).mode({0}) - 2.0 * std::exp(Complex(0.0, 0.7))) <= 1e-15);
  CHECK(test::max_diff(linear_phase(s, 0.0).values(), s.values()) == 0.0);
  CHECK(test::max_diff(linear_phase(linear_phase(s, 0.3), 1.1).values(), linear_phase(s, 1.4).values()) <= 1e-13);
  for (double m : {0.0, 1.0, 2.5, -1.0}) {
    const double before = sobolev_norm(s, m);
    CHECK(std::abs(sobolev_norm(linear_phase(s, 12.345), m) - before) <= 1e-13 * before);
  }
}

TEST_CASE("Sobolev norm examples", "[spectral]") {
  const auto g = build_grid(test::unit_circle(), {16});
  CHECK(sobolev_norm(SpectrumField(g), 3.0) == 0.0);
  SpectrumField c(g);
  c.mode({0}) = Complex(3.0, 4.0);
  CHECK(sobolev_norm(c, 0.0) == Catch::Approx(5.0));
  CHECK(sobolev_norm(c, 1.7) == Catch::Approx(5.0));
  // Non-integer exponent against the direct formula.
  SpectrumField m(g);
  m.mode({2}) = 1.0;
  CHECK(sobolev_norm(m, 0.75) == Catch::Approx(std::pow(5.0, 0.375)).epsilon(1e-14));
}

TEST_CASE("project and pad", "[spectral]") {
  const auto g = build_grid(test::unit_circle(), {16});
  SpectrumField s(g);
  test::fill_random(s, 5);
  CHECK(test::max_diff(project(s, {16}).values(), s.values()) == 0.0);
  CHECK(test::max_diff(project(pad(s, {64}), {16}).values(), s.values()) == 0.0);
  CHECK_THROWS_AS(project(s, {32}), ResolutionMismatchError);
  CHECK_THROWS_AS(pad(s, {8}), ResolutionMismatchError);
  SpectrumField single(g);
  single.mode({-3}) = Complex(0.5, 2.0);
  CHECK(sobolev_norm(pad(single, {48}), 1.0) == Catch::Approx(sobolev_norm(single, 1.0)).epsilon(1e-15));
  CHECK(pad(single, {48}).mode({-3}) == single.mode({-3}));

  const auto g2 = build_grid(Domain({0.0, 1.0}, {0.0, kTwoPi}), {8, 6});
  SpectrumField s2(g2);
  test::fill_random(s2, 9);
  const auto up = pad(s2, {16, 12});
  CHECK(up.mode({-4, 2}) == s2.mode({-4, 2}));
  CHECK(test::max_diff(project(up, {8, 6}).values(), s2.values()) == 0.0);
}

TEST_CASE("projection error of a smooth preset decays spectrally", "[spectral]") {
  // Truth: coefficients from a 1024-point rectangle rule, exact to round-off
  // for this analytic function.
  const auto fine = build_grid(test::unit_circle(), {1024});
  const auto truth = to_spectrum(sample(fine, [](double x, double) { return 3.0 / (2.0 + std::cos(x) * std::cos(x)); }));
  const auto g128 = build_grid(test::unit_circle(), {128});
  const auto s128 = to_spectrum(sample(g128, [](double x, double) { return 3.0 / (2.0 + std::cos(x) * std::cos(x)); }));
  auto error = [&](int n) {
    const auto approx = pad(project(s128, {n}), {1024});
    SpectrumField diff(fine);
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = approx[i] - truth[i];
    return sobolev_norm(diff, 1.0);
  };
  const double e16 = error(16);
  const double e32 = error(32);
  const double e64 = error(64);
  CHECK(e16 / e32 > 1e3);
  CHECK(e64 < 1e-13);
  CHECK(e32 > e64);
}

TEST_CASE("transforms are reentrant", "[spectral]") {
  const auto g = build_grid(test::unit_circle(), {256});
  GridField f(g);
  test::fill_random(f, 21);
  const auto expected = to_spectrum(f);
  std::vector<double> diffs(4, 1.0);
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < diffs.size(); ++t) {
    threads.emplace_back([&, t] {
      double worst = 0.0;
      for (int k = 0; k < 50; ++k) worst = std::max(worst, test::max_diff(to_spectrum(f).values(), expected.values()));
      diffs[t] = worst;
    });
  }
  for (auto& th : threads) th.join();
  for (double d : diffs) CHECK(d == 0.0);
}
