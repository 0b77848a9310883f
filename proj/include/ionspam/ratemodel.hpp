#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ionspam/species.hpp"

namespace ionspam {

inline double delta_minus_hz(const SpeciesParams& s) {
  return s.hf_s_hz - s.hf_p_hz;
}

// Steady-state preparation error of cyclic pumping in the low-saturation,
// many-cycle limit:
//   eps = Gamma^2/2 * [ 1/dS^2 + (eta_cross/eta_up) * 1/(dS-dP)^2 ]
inline double prep_error_steady_state(const SpeciesParams& s) {
  s.validate();
  const double dm = delta_minus_hz(s);
  if (!(dm > 0)) {
    throw std::domain_error("species '" + s.name +
                            "': model undefined for hf_s_hz - hf_p_hz <= 0");
  }
  if (!(s.eta_up > 0)) {
    throw std::domain_error("species '" + s.name + "': eta_up must be > 0");
  }
  const double g2 = 0.5 * s.linewidth_hz * s.linewidth_hz;
  return g2 * (1.0 / (s.hf_s_hz * s.hf_s_hz) +
               (s.eta_cross / s.eta_up) / (dm * dm));
}

inline std::vector<std::pair<std::string, double>> table1_report() {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& s : builtin_species()) {
    out.emplace_back(s.name, prep_error_steady_state(s));
  }
  return out;
}

struct RatePumpConfig {
  SpeciesParams species;
  double scatter_rate_hz = 0.0;  // flush-beam scattering rate

  static RatePumpConfig with_default_scatter(const SpeciesParams& s) {
    // default gamma = 1e-3 * Gamma, well inside the low-saturation regime
    return RatePumpConfig{s, 1e-3 * s.linewidth_hz};
  }

  void validate() const {
    species.validate();
    if (!(scatter_rate_hz > 0)) {
      throw std::invalid_argument("scatter_rate_hz must be > 0");
    }
  }

  // the model assumes gamma << Gamma; callers should warn above this
  bool low_saturation() const {
    return scatter_rate_hz <= 0.1 * species.linewidth_hz;
  }
};

struct PopulationPair {
  double rho_qubit = 0.0;
  double rho_other = 0.0;
};

struct RateCoefficients {
  double out_of_qubit_hz = 0.0;  // off-resonant pumping out of |0>
  double into_qubit_hz = 0.0;    // flush-cycle return into |0>
};

inline RateCoefficients pump_rate_coefficients(const RatePumpConfig& cfg) {
  const SpeciesParams& s = cfg.species;
  const double dm = delta_minus_hz(s);
  if (!(dm > 0)) {
    throw std::domain_error("hf_s_hz - hf_p_hz must be > 0");
  }
  const double a = s.linewidth_hz / (2.0 * s.hf_s_hz);
  const double b = s.linewidth_hz / (2.0 * dm);
  RateCoefficients rc;
  rc.out_of_qubit_hz = (s.eta_up * a * a + s.eta_cross * b * b) * cfg.scatter_rate_hz;
  // The return channel carries the same branching factor as the first loss
  // term; the fixed point of the pair then reduces exactly to
  // prep_error_steady_state (ratio of populations with the rates set equal).
  rc.into_qubit_hz = s.eta_up * cfg.scatter_rate_hz / 2.0;
  return rc;
}

// Coupled two-population pumping equations, closed by conservation: what
// leaves rho_|0> enters rho_!=|0> and vice versa. Classic fixed-step RK4;
// validate convergence by halving dt.
inline std::vector<std::pair<double, PopulationPair>> integrate_rate_equations(
    const RatePumpConfig& cfg, PopulationPair init, double duration_s,
    double dt_s) {
  cfg.validate();
  if (!(duration_s > 0)) throw std::invalid_argument("duration_s must be > 0");
  if (!(dt_s > 0) || dt_s > duration_s) {
    throw std::invalid_argument("dt_s must satisfy 0 < dt_s <= duration_s");
  }
  const RateCoefficients rc = pump_rate_coefficients(cfg);

  auto deriv = [&](const PopulationPair& p) {
    PopulationPair d;
    const double leak = rc.out_of_qubit_hz * p.rho_qubit;
    const double refill = rc.into_qubit_hz * p.rho_other;
    d.rho_qubit = refill - leak;
    d.rho_other = leak - refill;
    return d;
  };

  std::vector<std::pair<double, PopulationPair>> series;
  series.reserve(static_cast<std::size_t>(duration_s / dt_s) + 2);
  series.emplace_back(0.0, init);

  PopulationPair p = init;
  double t = 0.0;
  while (t < duration_s) {
    const double h = std::min(dt_s, duration_s - t);
    const PopulationPair k1 = deriv(p);
    const PopulationPair p2{p.rho_qubit + 0.5 * h * k1.rho_qubit,
                            p.rho_other + 0.5 * h * k1.rho_other};
    const PopulationPair k2 = deriv(p2);
    const PopulationPair p3{p.rho_qubit + 0.5 * h * k2.rho_qubit,
                            p.rho_other + 0.5 * h * k2.rho_other};
    const PopulationPair k3 = deriv(p3);
    const PopulationPair p4{p.rho_qubit + h * k3.rho_qubit,
                            p.rho_other + h * k3.rho_other};
    const PopulationPair k4 = deriv(p4);
    p.rho_qubit += h / 6.0 *
                   (k1.rho_qubit + 2 * k2.rho_qubit + 2 * k3.rho_qubit + k4.rho_qubit);
    p.rho_other += h / 6.0 *
                   (k1.rho_other + 2 * k2.rho_other + 2 * k3.rho_other + k4.rho_other);
    if (!std::isfinite(p.rho_qubit) || !std::isfinite(p.rho_other)) {
      throw std::runtime_error("rate-equation integration produced non-finite values");
    }
    t += h;
    series.emplace_back(t, p);
  }
  return series;
}

}  // namespace ionspam
