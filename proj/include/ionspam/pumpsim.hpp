#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ionspam/species.hpp"

namespace ionspam {

// Indexed enumeration of the sublevels a protocol acts on. For the Ba-style
// protocols this is {S1/2, D5/2}.
class StateSpace {
 public:
  StateSpace(const SpeciesParams& species, const std::set<Manifold>& manifolds)
      : species_(species), states_(enumerate_sublevels(species, manifolds)) {
    for (std::size_t i = 0; i < states_.size(); ++i) index_[states_[i]] = i;
  }

  const SpeciesParams& species() const { return species_; }
  const std::vector<ZeemanState>& states() const { return states_; }
  std::size_t size() const { return states_.size(); }

  bool contains(const ZeemanState& z) const { return index_.count(z) != 0; }

  std::size_t index(const ZeemanState& z) const {
    auto it = index_.find(z);
    if (it == index_.end()) {
      throw std::out_of_range("sublevel not in state space: " + state_name(z));
    }
    return it->second;
  }

  ZeemanState qubit_zero() const {
    return {Manifold::S12, species_.f_lower(), 0};
  }
  ZeemanState qubit_one() const {
    return {Manifold::S12, species_.f_upper(), 0};
  }

 private:
  SpeciesParams species_;
  std::vector<ZeemanState> states_;
  std::map<ZeemanState, std::size_t> index_;
};

struct PopulationVector {
  std::vector<double> probs;

  double sum() const {
    return std::accumulate(probs.begin(), probs.end(), 0.0);
  }

  void check_normalized(double tol = 1e-12) const {
    for (double p : probs) {
      if (p < -tol) throw std::invalid_argument("negative population entry");
    }
    if (std::abs(sum() - 1.0) > tol) {
      throw std::invalid_argument("population vector not normalized");
    }
  }
};

inline PopulationVector delta_population(const StateSpace& space,
                                         const ZeemanState& z) {
  PopulationVector p;
  p.probs.assign(space.size(), 0.0);
  p.probs[space.index(z)] = 1.0;
  return p;
}

// 1 - eps0 in |0>, eps0 split evenly over the lower-manifold mF = +/-1 states.
inline PopulationVector qubit_error_population(const StateSpace& space,
                                               double eps0) {
  PopulationVector p;
  p.probs.assign(space.size(), 0.0);
  const int fl = space.species().f_lower();
  p.probs[space.index(space.qubit_zero())] = 1.0 - eps0;
  p.probs[space.index({Manifold::S12, fl, -1})] = eps0 / 2.0;
  p.probs[space.index({Manifold::S12, fl, +1})] = eps0 / 2.0;
  return p;
}

// Dense row-stochastic matrix; row i lists where population in state i goes.
struct TransitionMatrix {
  std::size_t n = 0;
  std::vector<double> a;  // row-major

  static TransitionMatrix identity(std::size_t n) {
    TransitionMatrix m;
    m.n = n;
    m.a.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m.a[i * n + i] = 1.0;
    return m;
  }

  double& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * n + j]; }

  // this followed by other
  TransitionMatrix then(const TransitionMatrix& other) const {
    TransitionMatrix m;
    m.n = n;
    m.a.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        const double v = at(i, k);
        if (v == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) {
          m.a[i * n + j] += v * other.at(k, j);
        }
      }
    }
    return m;
  }

  PopulationVector apply(const PopulationVector& p) const {
    PopulationVector out;
    out.probs.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = p.probs[i];
      if (v == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        out.probs[j] += v * at(i, j);
      }
    }
    return out;
  }

  double max_row_sum_deviation() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += at(i, j);
      worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
  }
};

// --- protocol steps ---------------------------------------------------------

// 493 nm, S(F+1) -> P(F+1): empties the upper ground manifold uniformly into
// the lower one; off-resonant excitation leaks |0> at the given probability.
struct FlushPulse {
  double leak_prob_qubit = 1e-6;
  double duration_us = 1.0;
};

// microwave pi-pulse (S,Flow,mf) <-> (S,Fup,mf), mf = mf_sign
struct MicrowavePi {
  int mf_sign = +1;
  double infidelity = 0.0;
  double duration_us = 50.0;
};

// 1762 nm E2 pi-pulse (S,Flow,+/-1) <-> (D5/2,Flow,-/+1)
struct ShelvePi1762 {
  int mf_sign = +1;
  double infidelity = 0.0;
  double off_resonant_qubit_leak = 0.0;
  double duration_us = 50.0;
};

// 614 nm deshelve plus sideband marching and 650 nm repump, collapsed into one
// effective step: all D5/2 population lands uniformly in the lower S manifold
// (zero branching to the upper one).
struct Deshelve614 {
  double duration_us = 4.0;
};

// pi-polarized 493 nm pumping: collapses S1/2 onto |0> up to a residual spread
// uniformly over the non-qubit S1/2 sublevels
struct PolarizationPump {
  double residual_error = 7e-3;
  double duration_us = 40.0;
};

// |0> <-> |1> composite microwave pulse
struct TransferPi {
  double infidelity = 5.4e-5;
  double duration_us = 200.0;
};

using ProtocolStep = std::variant<FlushPulse, MicrowavePi, ShelvePi1762,
                                  Deshelve614, PolarizationPump, TransferPi>;

inline void validate_step(const ProtocolStep& step) {
  auto check = [](double p, const char* what) {
    if (p < 0 || p > 1) {
      throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
    }
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FlushPulse>) {
          check(s.leak_prob_qubit, "FlushPulse.leak_prob_qubit");
        } else if constexpr (std::is_same_v<T, MicrowavePi>) {
          check(s.infidelity, "MicrowavePi.infidelity");
        } else if constexpr (std::is_same_v<T, ShelvePi1762>) {
          check(s.infidelity, "ShelvePi1762.infidelity");
          check(s.off_resonant_qubit_leak, "ShelvePi1762.off_resonant_qubit_leak");
        } else if constexpr (std::is_same_v<T, PolarizationPump>) {
          check(s.residual_error, "PolarizationPump.residual_error");
        } else if constexpr (std::is_same_v<T, TransferPi>) {
          check(s.infidelity, "TransferPi.infidelity");
        }
      },
      step);
}

inline double step_duration_us(const ProtocolStep& step) {
  return std::visit([](const auto& s) { return s.duration_us; }, step);
}

inline TransitionMatrix transition_matrix(const ProtocolStep& step,
                                          const StateSpace& space) {
  validate_step(step);
  const SpeciesParams& sp = space.species();
  const std::size_t n = space.size();
  const int fl = sp.f_lower();
  const int fu = sp.f_upper();
  TransitionMatrix m = TransitionMatrix::identity(n);
  const std::size_t q0 = space.index(space.qubit_zero());

  auto clear_row = [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) m.at(i, j) = 0.0;
  };
  auto swap_rows = [&](const ZeemanState& a, const ZeemanState& b,
                       double success) {
    const std::size_t ia = space.index(a);
    const std::size_t ib = space.index(b);
    clear_row(ia);
    clear_row(ib);
    m.at(ia, ib) = success;
    m.at(ia, ia) = 1.0 - success;
    m.at(ib, ia) = success;
    m.at(ib, ib) = 1.0 - success;
  };

  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FlushPulse>) {
          const int n_lower = 2 * fl + 1;
          for (int mf = -fu; mf <= fu; ++mf) {
            const std::size_t i = space.index({Manifold::S12, fu, mf});
            clear_row(i);
            for (int ml = -fl; ml <= fl; ++ml) {
              m.at(i, space.index({Manifold::S12, fl, ml})) = 1.0 / n_lower;
            }
          }
          if (s.leak_prob_qubit > 0) {
            clear_row(q0);
            m.at(q0, q0) = 1.0 - s.leak_prob_qubit;
            // leaked population ends up in the other lower-manifold sublevels
            const double share = s.leak_prob_qubit / (n_lower - 1);
            for (int ml = -fl; ml <= fl; ++ml) {
              if (ml == 0) continue;
              m.at(q0, space.index({Manifold::S12, fl, ml})) = share;
            }
          }
        } else if constexpr (std::is_same_v<T, MicrowavePi>) {
          const int mf = s.mf_sign;
          swap_rows({Manifold::S12, fl, mf}, {Manifold::S12, fu, mf},
                    1.0 - s.infidelity);
        } else if constexpr (std::is_same_v<T, ShelvePi1762>) {
          const int mf = s.mf_sign;
          swap_rows({Manifold::S12, fl, mf}, {Manifold::D52, fl, -mf},
                    1.0 - s.infidelity);
          if (s.off_resonant_qubit_leak > 0) {
            // Delta mF = +/-2 off-resonant shelving of |0>
            clear_row(q0);
            m.at(q0, q0) = 1.0 - s.off_resonant_qubit_leak;
            m.at(q0, space.index({Manifold::D52, fl + 2, +2})) =
                s.off_resonant_qubit_leak / 2.0;
            m.at(q0, space.index({Manifold::D52, fl + 2, -2})) =
                s.off_resonant_qubit_leak / 2.0;
          }
        } else if constexpr (std::is_same_v<T, Deshelve614>) {
          const int n_lower = 2 * fl + 1;
          for (std::size_t i = 0; i < n; ++i) {
            if (space.states()[i].manifold != Manifold::D52) continue;
            clear_row(i);
            for (int ml = -fl; ml <= fl; ++ml) {
              m.at(i, space.index({Manifold::S12, fl, ml})) = 1.0 / n_lower;
            }
          }
        } else if constexpr (std::is_same_v<T, PolarizationPump>) {
          std::vector<std::size_t> s12;
          for (std::size_t i = 0; i < n; ++i) {
            if (space.states()[i].manifold == Manifold::S12) s12.push_back(i);
          }
          const double share = s.residual_error / (s12.size() - 1);
          for (std::size_t i : s12) {
            clear_row(i);
            m.at(i, q0) = 1.0 - s.residual_error;
            for (std::size_t j : s12) {
              if (j == q0) continue;
              m.at(i, j) += share;
            }
          }
        } else if constexpr (std::is_same_v<T, TransferPi>) {
          swap_rows(space.qubit_zero(), space.qubit_one(), 1.0 - s.infidelity);
        }
      },
      step);
  return m;
}

inline PopulationVector apply_step(const StateSpace& space,
                                   const PopulationVector& pop,
                                   const ProtocolStep& step) {
  pop.check_normalized();
  return transition_matrix(step, space).apply(pop);
}

// Pulse sequence: initial steps once, then `cycles` repetitions of
// cycle_steps. flush_mask (when non-empty, one entry per cycle) drops the
// FlushPulse steps in cycles where it is false.
struct Protocol {
  std::vector<ProtocolStep> initial_steps;
  std::vector<ProtocolStep> cycle_steps;
  int cycles = 0;
  std::vector<bool> flush_mask;

  void validate() const {
    if (cycles < 0) throw std::invalid_argument("cycles must be >= 0");
    if (!flush_mask.empty() &&
        flush_mask.size() != static_cast<std::size_t>(cycles)) {
      throw std::invalid_argument("flush_mask must have one entry per cycle");
    }
    for (const auto& s : initial_steps) validate_step(s);
    for (const auto& s : cycle_steps) validate_step(s);
  }

  bool flush_enabled(int cycle) const {
    return flush_mask.empty() || flush_mask[static_cast<std::size_t>(cycle)];
  }

  double total_duration_us() const {
    double t = 0.0;
    for (const auto& s : initial_steps) t += step_duration_us(s);
    for (int c = 0; c < cycles; ++c) {
      for (const auto& s : cycle_steps) {
        if (!flush_enabled(c) && std::holds_alternative<FlushPulse>(s)) continue;
        t += step_duration_us(s);
      }
    }
    return t;
  }
};

struct PumpParams {
  double polarization_residual = 7e-3;
  double flush_leak = 1e-6;
  double microwave_infidelity = 0.0;
  double shelve_infidelity = 0.0;
  double shelve_qubit_leak = 0.0;
};

inline Protocol build_polarization_prep(double residual) {
  Protocol p;
  p.initial_steps.push_back(PolarizationPump{residual});
  p.cycles = 0;
  return p;
}

// Microwave-assisted cycle. The flush sits at the end of the cycle body
// (equivalent re-bracketing of flush-first: the leading flush is a no-op
// right after polarization pumping), so each completed cycle shows the full
// 1/3 error reduction.
inline Protocol build_maop(int cycles, const PumpParams& pp = {}) {
  if (cycles < 0) throw std::invalid_argument("cycles must be >= 0");
  Protocol p = build_polarization_prep(pp.polarization_residual);
  p.cycles = cycles;
  p.cycle_steps.push_back(MicrowavePi{+1, pp.microwave_infidelity});
  p.cycle_steps.push_back(MicrowavePi{-1, pp.microwave_infidelity});
  p.cycle_steps.push_back(FlushPulse{pp.flush_leak});
  return p;
}

// Narrow-band 1762 nm cycle: flush (maskable), two shelve pulses, deshelve.
inline Protocol build_nbop(int cycles, std::vector<bool> flush_mask,
                           const PumpParams& pp = {}) {
  if (cycles < 0) throw std::invalid_argument("cycles must be >= 0");
  Protocol p = build_polarization_prep(pp.polarization_residual);
  p.cycles = cycles;
  p.flush_mask = std::move(flush_mask);
  p.cycle_steps.push_back(FlushPulse{pp.flush_leak});
  p.cycle_steps.push_back(ShelvePi1762{+1, pp.shelve_infidelity, pp.shelve_qubit_leak, 45.0});
  p.cycle_steps.push_back(ShelvePi1762{-1, pp.shelve_infidelity, pp.shelve_qubit_leak, 55.0});
  p.cycle_steps.push_back(Deshelve614{});
  p.validate();
  return p;
}

// flush in the first `flushed` cycles only
inline std::vector<bool> flush_first_n(int cycles, int flushed) {
  std::vector<bool> mask(static_cast<std::size_t>(cycles), false);
  for (int i = 0; i < std::min(cycles, flushed); ++i) mask[i] = true;
  return mask;
}

// One full cycle as a single stochastic matrix.
inline TransitionMatrix cycle_matrix(const Protocol& protocol,
                                     const StateSpace& space,
                                     bool with_flush) {
  TransitionMatrix m = TransitionMatrix::identity(space.size());
  for (const auto& s : protocol.cycle_steps) {
    if (!with_flush && std::holds_alternative<FlushPulse>(s)) continue;
    m = m.then(transition_matrix(s, space));
  }
  return m;
}

// Deterministic matrix evolution; entry k is (cycle index, 1 - pop(|0>))
// with cycle 0 the state right after the initial steps.
inline std::vector<std::pair<int, double>> run_prep(const Protocol& protocol,
                                                    const StateSpace& space,
                                                    PopulationVector pop) {
  protocol.validate();
  pop.check_normalized();
  const std::size_t q0 = space.index(space.qubit_zero());
  for (const auto& s : protocol.initial_steps) {
    pop = transition_matrix(s, space).apply(pop);
  }
  std::vector<std::pair<int, double>> series;
  series.reserve(static_cast<std::size_t>(protocol.cycles) + 1);
  series.emplace_back(0, 1.0 - pop.probs[q0]);

  const TransitionMatrix with_flush = cycle_matrix(protocol, space, true);
  const TransitionMatrix without_flush = cycle_matrix(protocol, space, false);
  for (int c = 0; c < protocol.cycles; ++c) {
    const TransitionMatrix& m =
        protocol.flush_enabled(c) ? with_flush : without_flush;
    pop = m.apply(pop);
    series.emplace_back(c + 1, 1.0 - pop.probs[q0]);
  }
  return series;
}

// Final population after the full protocol.
inline PopulationVector run_protocol(const Protocol& protocol,
                                     const StateSpace& space,
                                     PopulationVector pop) {
  protocol.validate();
  pop.check_normalized();
  for (const auto& s : protocol.initial_steps) {
    pop = transition_matrix(s, space).apply(pop);
  }
  const TransitionMatrix with_flush = cycle_matrix(protocol, space, true);
  const TransitionMatrix without_flush = cycle_matrix(protocol, space, false);
  for (int c = 0; c < protocol.cycles; ++c) {
    pop = (protocol.flush_enabled(c) ? with_flush : without_flush).apply(pop);
  }
  return pop;
}

}  // namespace ionspam
