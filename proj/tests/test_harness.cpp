#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "nkge/harness.hpp"
#include "support.hpp"

using namespace nkge;
using nkge::test::kTwoPi;

TEST_CASE("convergence table orders follow the definition", "[harness][property]") {
  const std::vector<double> params{0.1, 0.05, 0.025, 0.0125, 0.00625};
  const std::vector<double> errors{3.1e-2, 7.9e-3, 1.7e-3, 1e-14, 2e-14};
  const auto table = make_convergence_table(params, errors, 2.0);
  REQUIRE(table.rows.size() == 5);
  CHECK_FALSE(table.rows[0].order);
  for (std::size_t k = 1; k < 3; ++k) {
    REQUIRE(table.rows[k].order);
    CHECK(std::abs(*table.rows[k].order - std::log(errors[k - 1] / errors[k]) / std::log(2.0)) <= 1e-12);
  }
  CHECK_FALSE(table.rows[3].order);
  CHECK_FALSE(table.rows[4].order);

  const auto four = make_convergence_table(std::vector<double>{1.0, 0.25}, std::vector<double>{1.6e-1, 1e-2}, 4.0);
  CHECK(*four.rows[1].order == Catch::Approx(2.0).epsilon(1e-14));

  std::vector<double> quadratic;
  for (double tau : params) quadratic.push_back(5.0 * tau * tau * (1.0 + 0.01 * tau));
  CHECK(fitted_order(make_convergence_table(params, quadratic, 2.0)) == Catch::Approx(2.0).margin(1e-2));
}

TEST_CASE("reference defaults", "[harness]") {
  CHECK(default_reference_shape({32}) == Shape{120});
  CHECK(default_reference_shape({64, 16}) == Shape{128, 120});
  for (double tau : {0.1, 0.05, 0.0125, 0.8, 1e-3, 3.2e-3, 2.5e-4}) {
    const double ref = default_reference_tau(tau);
    CHECK(ref <= std::min(1e-4, tau / 16) * (1 + 1e-12));
    const double k = tau / ref;
    CHECK(std::abs(k - std::round(k)) <= 1e-9 * k);
  }
  CHECK(default_reference_tau(0.0125) == Catch::Approx(1e-4));
  CHECK(default_reference_tau(1e-3) == Catch::Approx(1e-3 / 16));
}

TEST_CASE("H1 error of identical and truncated states", "[harness]") {
  const auto spec = preset("longtime-1d-p2");
  const auto fine = build_grid(spec.domain, {64});
  const auto uv = initial_state(spec, fine);
  const SpectralUV ref{to_spectrum(uv.u), to_spectrum(uv.v), 0.0};
  const auto same = error_h1(ref, ref);
  CHECK(same.e1 == 0.0);
  CHECK(same.ev0 == 0.0);

  const SpectralUV coarse{project(ref.u, {16}), project(ref.v, {16}), 0.0};
  SpectrumField tail_u = ref.u;
  SpectrumField tail_v = ref.v;
  const auto kept_u = pad(coarse.u, {64});
  for (std::size_t i = 0; i < tail_u.size(); ++i) {
    if (kept_u[i] != Complex(0.0)) {
      tail_u[i] = 0.0;
      tail_v[i] = 0.0;
    }
  }
  const auto err = error_h1(coarse, ref);
  CHECK(err.e1 == Catch::Approx(sobolev_norm(tail_u, 1.0)).epsilon(1e-12));
  CHECK(err.ev0 == Catch::Approx(sobolev_norm(tail_v, 0.0)).epsilon(1e-12));
  CHECK(err.e1 > 0.0);
}

TEST_CASE("linear reference equals the analytic propagator", "[harness]") {
  const auto spec = preset("longtime-1d-p2").with_epsilon(0.0);
  const Shape shape{64};
  const double times[] = {0.5, 2.0};
  const auto ref = compute_reference(spec, times, shape, 1e-3);
  const auto g = build_grid(spec.domain, shape);
  const auto start = std::get<StateEta>(make_split_state(spec.formulation, initial_state(spec, g)));
  for (double t : times) {
    const auto exact = uv_spectra(flow_linear(start, t));
    const auto& got = ref.at(t);
    CHECK(test::max_diff(got.u.values(), exact.u.values()) <= 1e-11);
    CHECK(test::max_diff(got.v.values(), exact.v.values()) <= 1e-11);
  }
  CHECK_THROWS_AS(ref.at(1.0), MissingSnapshotError);
  CHECK_THROWS_AS(compute_reference(spec, std::vector<double>{0.5}, shape, 0.3), ValidationError);
}

TEST_CASE("temporal errors at zero coupling sit at the round-off floor", "[harness]") {
  const auto spec = preset("longtime-1d-p2").with_epsilon(0.0);
  ReferenceSettings settings;
  settings.shape = Shape{32};
  const std::vector<double> taus{0.1, 0.05, 0.025};
  const auto result = temporal_convergence(spec, {32}, SchemeKind::Strang2, taus, 1.0, settings);
  for (const auto& row : result.table.rows) {
    CHECK(row.error <= 1e-12);
    CHECK_FALSE(row.order);
  }
  CHECK_THROWS_AS(temporal_convergence(spec, {32}, SchemeKind::Strang2, std::vector<double>{0.1, 0.04, 0.01}, 1.0,
                                       settings),
                  ValidationError);
}

TEST_CASE("reference self-consistency on the smooth preset", "[harness][property]") {
  const auto spec = preset("longtime-1d-p2").with_epsilon(0.5);
  const std::vector<double> taus{0.05};
  const double t_eval = 2.0;
  const auto base = temporal_convergence(spec, {32}, SchemeKind::Strang2, taus, t_eval);
  ReferenceSettings half_tau;
  half_tau.tau = default_reference_tau(0.05) / 2;
  ReferenceSettings double_n;
  double_n.shape = Shape{240};
  const double e = base.records[0].e1;
  CHECK(std::abs(temporal_convergence(spec, {32}, SchemeKind::Strang2, taus, t_eval, half_tau).records[0].e1 - e) <
        0.01 * e);
  CHECK(std::abs(temporal_convergence(spec, {32}, SchemeKind::Strang2, taus, t_eval, double_n).records[0].e1 - e) <
        0.01 * e);
  ReferenceSettings verify;
  verify.verify = true;
  CHECK_FALSE(temporal_convergence(spec, {32}, SchemeKind::Strang2, taus, t_eval, verify).records[0].reference_limited);
}

TEST_CASE("sweeps are independent of the thread count", "[harness][property]") {
  const auto spec = preset("longtime-1d-p2").with_epsilon(0.5);
  ReferenceSettings settings;
  settings.shape = Shape{64};
  settings.tau = 1e-3;
  const std::vector<double> taus{0.1, 0.05, 0.025, 0.0125};
  const auto serial = temporal_convergence(spec, {32}, SchemeKind::Strang2, taus, 1.0, settings, 1);
  const auto threaded = temporal_convergence(spec, {32}, SchemeKind::Strang2, taus, 1.0, settings, 3);
  std::ostringstream a, b;
  write_error_csv(a, serial.records);
  write_error_csv(b, threaded.records);
  CHECK(a.str() == b.str());
}

TEST_CASE("longtime records keep a running maximum", "[harness][property]") {
  const auto spec = preset("longtime-1d-p2");
  ReferenceSettings settings;
  settings.shape = Shape{64};
  const std::vector<double> eps{1.0, 0.5};
  const auto result = longtime_sweep(spec, {32}, SchemeKind::Strang2, 0.05, eps, 4, settings, 2);
  REQUIRE(result.runs.size() == 2);
  REQUIRE(result.ratios.size() == 1);
  for (const auto& run : result.runs) {
    CHECK(run.sample_every == 4);
    CHECK(run.t_final == Catch::Approx(1.0 / std::pow(run.eps, 4)));
    double running = 0.0;
    for (const auto& r : run.records) {
      CHECK(r.e1 >= 0.0);
      running = std::max(running, r.e1);
      CHECK(r.e1max == running);
    }
    CHECK(run.records.back().t == Catch::Approx(run.t_final));
    CHECK(run.final_e1max == running);
  }
  CHECK(result.ratios[0] == Catch::Approx(result.runs[0].final_e1max / result.runs[1].final_e1max));
  CHECK(default_sample_interval(320000) == 320);
  CHECK(default_sample_interval(20) == 1);
}

TEST_CASE("table experiment shape and leading entry", "[harness]") {
  const auto result = table1_experiment(preset("osc-1d-p1"), {128}, 0.05, 1.0, 2);
  REQUIRE(result.errors.size() == 2);
  CHECK(result.eps == std::vector<double>{1.0, 0.5});
  CHECK(result.kappa == std::vector<double>{0.05, 0.0125});
  CHECK(result.errors[0][0] == Catch::Approx(1.11e-2).epsilon(0.1));
  CHECK(result.records.size() == 4);
  CHECK(result.records[3].tau == Catch::Approx(0.05));
  CHECK(result.records[3].t == Catch::Approx(4.0));
  REQUIRE(result.rows[0].rows[1].order);
  CHECK(*result.rows[0].rows[1].order == Catch::Approx(2.0).margin(0.15));
  CHECK_THROWS_AS(table1_experiment(preset("longtime-1d-p2"), {64}, 0.05, 1.0, 2), ValidationError);
}

TEST_CASE("spatial errors decay spectrally", "[harness]") {
  const auto spec = preset("longtime-1d-p2").with_epsilon(0.5);
  const std::vector<int> ns{8, 16, 32};
  const auto result = spatial_convergence(spec, SchemeKind::Strang2, ns, 1e-2, 1.0);
  REQUIRE(result.table.rows.size() == 3);
  CHECK(result.table.rows[0].error / result.table.rows[1].error >= 10.0);
  CHECK(result.table.rows[1].error / result.table.rows[2].error >= 10.0);
  ReferenceSettings at_reference;
  at_reference.shape = Shape{32};
  const auto floor = spatial_convergence(spec, SchemeKind::Strang2, std::vector<int>{32}, 1e-2, 1.0, at_reference);
  CHECK(floor.table.rows[0].error <= 1e-12);
}

TEST_CASE("csv formatting", "[harness]") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(16.0) == "16");
  CHECK(format_shape({32, 32}) == "32x32");
  std::ostringstream out;
  const ErrorRecord records[] = {{SchemeKind::Strang2, 1, 0.5, 0.05, 0.0125, {128}, 4.0, 1e-3, 2e-3, false},
                                 {SchemeKind::Lie1, 2, 1.0, 0.1, std::nullopt, {8, 8}, 1.0, 0.5, 0.5, true}};
  write_error_csv(out, records);
  CHECK(out.str() ==
        "scheme,p,eps,tau,kappa,N,t,e1,e1max\n"
        "strang2,1,0.5,0.050000000000000003,0.012500000000000001,128,4,0.001,0.002\n"
        "lie1,2,1,0.10000000000000001,,8x8,1,0.5,0.5\n");
  const auto j = to_json(records[1]);
  CHECK(j["reference_limited"] == true);
}

TEST_CASE("parallel_for propagates failures", "[harness]") {
  std::vector<int> hits(10, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] = static_cast<int>(i); });
  for (std::size_t i = 0; i < hits.size(); ++i) CHECK(hits[i] == static_cast<int>(i));
  CHECK_THROWS_AS(parallel_for(5, 2,
                               [](std::size_t i) {
                                 if (i == 3) throw BlowUpError("boom", 1, 0.1);
                               }),
                  BlowUpError);
}
