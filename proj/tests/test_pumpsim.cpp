#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "ionspam/pumpsim.hpp"

using namespace ionspam;

namespace {

StateSpace ba_space() {
  return StateSpace(find_species(builtin_species(), "137Ba+"),
                    {Manifold::S12, Manifold::D52});
}

// stationary distribution of a row-stochastic matrix by Gaussian elimination
// on (M^T - I) p = 0 with sum(p) = 1; independent of the iteration path
std::vector<double> stationary_distribution(const TransitionMatrix& m) {
  const std::size_t n = m.n;
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      a[i][j] = m.at(j, i) - (i == j ? 1.0 : 0.0);
    }
  }
  for (std::size_t j = 0; j < n; ++j) a[n - 1][j] = 1.0;
  a[n - 1][n] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    REQUIRE(std::abs(a[col][col]) > 1e-14);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = a[i][n] / a[i][i];
  return p;
}

std::vector<ProtocolStep> sample_steps() {
  return {
      FlushPulse{0.0},
      FlushPulse{3e-4},
      MicrowavePi{+1, 0.0},
      MicrowavePi{-1, 0.02},
      ShelvePi1762{+1, 0.01, 1e-5},
      ShelvePi1762{-1, 0.0, 0.0},
      Deshelve614{},
      PolarizationPump{7e-3},
      PolarizationPump{0.0},
      TransferPi{5.4e-5},
  };
}

}  // namespace

TEST_CASE("every step matrix is row-stochastic") {
  const auto space = ba_space();
  for (const auto& step : sample_steps()) {
    CHECK(transition_matrix(step, space).max_row_sum_deviation() < 1e-12);
  }
}

TEST_CASE("applying any step preserves total probability") {
  const auto space = ba_space();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& step : sample_steps()) {
    PopulationVector p;
    p.probs.resize(space.size());
    double sum = 0.0;
    for (auto& x : p.probs) {
      x = u(rng);
      sum += x;
    }
    for (auto& x : p.probs) x /= sum;
    const auto out = apply_step(space, p, step);
    CHECK(std::abs(out.sum() - 1.0) < 1e-12);
    for (double x : out.probs) CHECK(x >= -1e-15);
  }
}

TEST_CASE("flush empties F=2 uniformly into F=1") {
  const auto space = ba_space();
  PopulationVector p;
  p.probs.assign(space.size(), 0.0);
  for (int mf = -2; mf <= 2; ++mf) {
    p.probs[space.index({Manifold::S12, 2, mf})] = 0.2;
  }
  const auto out = apply_step(space, p, FlushPulse{0.0});
  for (int mf = -1; mf <= 1; ++mf) {
    CHECK(out.probs[space.index({Manifold::S12, 1, mf})] ==
          Catch::Approx(1.0 / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("perfect microwave pi-pulse moves (1,+1) to (2,+1)") {
  const auto space = ba_space();
  const auto out = apply_step(
      space, delta_population(space, {Manifold::S12, 1, +1}), MicrowavePi{+1, 0.0});
  CHECK(out.probs[space.index({Manifold::S12, 2, +1})] == Catch::Approx(1.0));
}

TEST_CASE("1762 nm pi-pulse shelves (1,+1) into (D5/2,1,-1)") {
  const auto space = ba_space();
  const auto out = apply_step(space,
                              delta_population(space, {Manifold::S12, 1, +1}),
                              ShelvePi1762{+1, 0.0, 0.0});
  CHECK(out.probs[space.index({Manifold::D52, 1, -1})] == Catch::Approx(1.0));
}

TEST_CASE("deshelve returns all D5/2 population to S F=1, none to F=2") {
  const auto space = ba_space();
  const auto out = apply_step(space,
                              delta_population(space, {Manifold::D52, 1, -1}),
                              Deshelve614{});
  double f1 = 0.0, f2 = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& z = space.states()[i];
    if (z.manifold != Manifold::S12) continue;
    (z.f == 1 ? f1 : f2) += out.probs[i];
  }
  CHECK(f1 == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(f2 == 0.0);
}

TEST_CASE("step referencing absent sublevels is an error") {
  const StateSpace s12_only(find_species(builtin_species(), "137Ba+"),
                            {Manifold::S12});
  const auto p = delta_population(s12_only, {Manifold::S12, 1, 0});
  CHECK_THROWS_AS(apply_step(s12_only, p, ShelvePi1762{+1, 0.0, 0.0}),
                  std::out_of_range);
}

TEST_CASE("ideal cycles contract the error by exactly 2/3") {
  const auto space = ba_space();
  PumpParams ideal;
  ideal.polarization_residual = 0.0;
  ideal.flush_leak = 0.0;
  const double eps0 = 7e-3;
  const auto init = qubit_error_population(space, eps0);

  for (bool maop : {true, false}) {
    Protocol proto = maop ? build_maop(35, ideal)
                          : build_nbop(35, {}, ideal);
    proto.initial_steps.clear();  // error already placed by hand
    const auto series = run_prep(proto, space, init);
    REQUIRE(series.size() == 36);
    double expected = eps0;
    for (const auto& [cycle, err] : series) {
      CHECK(std::abs(err - expected) < 1e-12);
      expected *= 2.0 / 3.0;
    }
  }
}

TEST_CASE("prep error is non-increasing with ideal pulses") {
  const auto space = ba_space();
  PumpParams ideal;
  ideal.flush_leak = 0.0;
  const auto series = run_prep(build_nbop(20, {}, ideal), space,
                               delta_population(space, space.qubit_zero()));
  for (std::size_t i = 1; i < series.size(); ++i) {
    CHECK(series[i].second <= series[i - 1].second + 1e-15);
  }
}

TEST_CASE("flush leak produces a plateau matching the fixed point") {
  const auto space = ba_space();
  PumpParams pp;
  pp.flush_leak = 3e-4;
  const Protocol proto = build_nbop(400, {}, pp);
  const auto series = run_prep(proto, space,
                               delta_population(space, space.qubit_zero()));
  const double plateau = series.back().second;
  CHECK(plateau > 0);
  // iterated error stops changing
  CHECK(std::abs(series[399].second - plateau) < 1e-14);

  const auto stationary =
      stationary_distribution(cycle_matrix(proto, space, true));
  const double fixed_point_error =
      1.0 - stationary[space.index(space.qubit_zero())];
  CHECK(std::abs(plateau - fixed_point_error) < 1e-10);
}

TEST_CASE("builders produce the canonical sequences") {
  SECTION("nbop flush mask") {
    const auto proto = build_nbop(35, flush_first_n(35, 30));
    CHECK(proto.cycles == 35);
    for (int c = 0; c < 30; ++c) CHECK(proto.flush_enabled(c));
    for (int c = 30; c < 35; ++c) CHECK_FALSE(proto.flush_enabled(c));
  }
  SECTION("zero-cycle maop is polarization prep only") {
    const auto space = ba_space();
    const auto proto = build_maop(0);
    const auto series = run_prep(proto, space,
                                 delta_population(space, space.qubit_zero()));
    REQUIRE(series.size() == 1);
    CHECK(series[0].second == Catch::Approx(7e-3).epsilon(1e-9));
  }
  SECTION("zero-residual polarization prep lands everything in |0>") {
    const auto space = ba_space();
    const auto pop = run_protocol(build_polarization_prep(0.0), space,
                                  delta_population(space, {Manifold::S12, 2, 2}));
    CHECK(pop.probs[space.index(space.qubit_zero())] == Catch::Approx(1.0));
  }
}

TEST_CASE("protocol durations are reported") {
  const auto proto = build_nbop(35, flush_first_n(35, 30));
  // 40 us prep + per cycle: 1 us flush (30 cycles) + 45 + 55 + 4 us
  CHECK(proto.total_duration_us() ==
        Catch::Approx(40.0 + 30 * 1.0 + 35 * (45.0 + 55.0 + 4.0)));
}

TEST_CASE("invalid step probabilities rejected") {
  CHECK_THROWS_AS(validate_step(FlushPulse{1.5}), std::invalid_argument);
  CHECK_THROWS_AS(validate_step(MicrowavePi{+1, -0.1}), std::invalid_argument);
  Protocol p;
  p.cycles = -1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
