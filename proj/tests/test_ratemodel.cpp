#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ionspam/ratemodel.hpp"

using namespace ionspam;

TEST_CASE("steady-state prep error matches the printed table values") {
  const auto all = builtin_species();
  CHECK(prep_error_steady_state(find_species(all, "137Ba+")) ==
        Catch::Approx(1.1e-5).epsilon(0.05));
  CHECK(prep_error_steady_state(find_species(all, "9Be+")) ==
        Catch::Approx(5.4e-4).epsilon(0.05));
}

TEST_CASE("second term vanishes without cross branching") {
  auto s = find_species(builtin_species(), "137Ba+");
  s.eta_cross = 0.0;
  s.hf_p_hz = 0.0;
  // twice the I=1/2 state-preparation limit
  const double expected =
      s.linewidth_hz * s.linewidth_hz / (2.0 * s.hf_s_hz * s.hf_s_hz);
  CHECK(prep_error_steady_state(s) == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("prep error depends only on frequency ratios") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (const auto& s : builtin_species()) {
    const double base = prep_error_steady_state(s);
    for (int k = 0; k < 20; ++k) {
      auto scaled = s;
      const double a = scale(rng);
      scaled.linewidth_hz *= a;
      scaled.hf_s_hz *= a;
      scaled.hf_p_hz *= a;
      CHECK(prep_error_steady_state(scaled) == Catch::Approx(base).epsilon(1e-12));
    }
  }
}

TEST_CASE("table report ordering and positivity") {
  const auto report = table1_report();
  REQUIRE(report.size() == 7);
  for (const auto& [name, eps] : report) CHECK(eps > 0);
  // infidelity decreases with mass except the Mg anomaly
  auto value = [&](const std::string& n) {
    for (const auto& [name, eps] : report) {
      if (name == n) return eps;
    }
    FAIL("missing species " + n);
    return 0.0;
  };
  CHECK(value("173Yb+") < value("137Ba+"));
  CHECK(value("137Ba+") < value("135Ba+"));
  CHECK(value("135Ba+") < value("87Sr+"));
  CHECK(value("87Sr+") < value("43Ca+"));
  CHECK(value("43Ca+") < value("9Be+"));
  CHECK(value("9Be+") < value("25Mg+"));  // the anomaly: broader linewidth
}

TEST_CASE("rate-equation ODE relaxes to the closed-form ratio") {
  const auto ba = find_species(builtin_species(), "137Ba+");
  const double target = prep_error_steady_state(ba);
  for (double frac : {1e-4, 1e-3, 1e-2}) {
    RatePumpConfig cfg{ba, frac * ba.linewidth_hz};
    const RateCoefficients rc = pump_rate_coefficients(cfg);
    const double tau = 1.0 / (rc.into_qubit_hz + rc.out_of_qubit_hz);
    const auto series =
        integrate_rate_equations(cfg, {1.0, 0.0}, 30.0 * tau, tau / 50.0);
    const auto& fin = series.back().second;
    CHECK(fin.rho_other / fin.rho_qubit == Catch::Approx(target).epsilon(0.01));
  }
}

TEST_CASE("zero scatter rate leaves populations constant") {
  const auto ba = find_species(builtin_species(), "137Ba+");
  RatePumpConfig cfg{ba, 0.0};
  CHECK_THROWS_AS(integrate_rate_equations(cfg, {0.5, 0.5}, 1.0, 0.01),
                  std::invalid_argument);
  // vanishingly small rate: populations unchanged to machine precision
  cfg.scatter_rate_hz = 1e-30;
  const auto series = integrate_rate_equations(cfg, {0.5, 0.5}, 1.0, 0.01);
  CHECK(series.back().second.rho_qubit == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(series.back().second.rho_other == Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("total population conserved to 1e-12 per step") {
  const auto ba = find_species(builtin_species(), "137Ba+");
  const auto cfg = RatePumpConfig::with_default_scatter(ba);
  const auto series = integrate_rate_equations(cfg, {1.0, 0.0}, 1e-3, 1e-6);
  for (const auto& [t, p] : series) {
    CHECK(std::abs(p.rho_qubit + p.rho_other - 1.0) < 1e-12);
  }
}

TEST_CASE("halving the step changes the final ratio by < 1e-6 relative") {
  const auto ba = find_species(builtin_species(), "137Ba+");
  const auto cfg = RatePumpConfig::with_default_scatter(ba);
  const RateCoefficients rc = pump_rate_coefficients(cfg);
  const double tau = 1.0 / (rc.into_qubit_hz + rc.out_of_qubit_hz);
  auto final_ratio = [&](double dt) {
    const auto s = integrate_rate_equations(cfg, {1.0, 0.0}, 30.0 * tau, dt);
    return s.back().second.rho_other / s.back().second.rho_qubit;
  };
  const double coarse = final_ratio(tau / 20.0);
  const double fine = final_ratio(tau / 40.0);
  CHECK(std::abs(fine - coarse) / fine < 1e-6);
}

TEST_CASE("long-time ratio is independent of the scatter rate") {
  const auto yb = find_species(builtin_species(), "173Yb+");
  double ratios[2];
  int idx = 0;
  for (double frac : {1e-4, 1e-2}) {
    RatePumpConfig cfg{yb, frac * yb.linewidth_hz};
    const RateCoefficients rc = pump_rate_coefficients(cfg);
    const double tau = 1.0 / (rc.into_qubit_hz + rc.out_of_qubit_hz);
    const auto s = integrate_rate_equations(cfg, {1.0, 0.0}, 40.0 * tau, tau / 50.0);
    ratios[idx++] = s.back().second.rho_other / s.back().second.rho_qubit;
  }
  CHECK(ratios[0] == Catch::Approx(ratios[1]).epsilon(1e-4));
}

TEST_CASE("integration preconditions") {
  const auto ba = find_species(builtin_species(), "137Ba+");
  const auto cfg = RatePumpConfig::with_default_scatter(ba);
  CHECK_THROWS_AS(integrate_rate_equations(cfg, {1, 0}, -1.0, 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(integrate_rate_equations(cfg, {1, 0}, 1.0, 2.0),
                  std::invalid_argument);
  CHECK(cfg.low_saturation());
  CHECK_FALSE(RatePumpConfig{ba, 0.5 * ba.linewidth_hz}.low_saturation());
}
