#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "ionspam/detection.hpp"
#include "ionspam/pumpsim.hpp"
#include "ionspam/rng.hpp"
#include "ionspam/stats.hpp"

namespace ionspam {

// End-to-end simulated SPAM experiment: deterministic prep populations from
// the protocol, then per-trial sampling, optional |0> -> |1> transfer on odd
// trials (interleaved as in the real dataset), cabinet shelving, segmented
// detection, optional correlated-error injection.
struct SpamPipelineConfig {
  SpeciesParams species;
  Protocol protocol;
  double transfer_infidelity = 5.4e-5;
  DetectionConfig detection;
  ShelvingConfig shelving;
  std::optional<BurstModel> bursts;
  long long trials_per_state = 1000;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const {
    species.validate();
    protocol.validate();
    detection.validate();
    shelving.validate();
    if (bursts) bursts->validate();
    if (trials_per_state < 1) throw std::invalid_argument("trials_per_state must be >= 1");
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (transfer_infidelity < 0 || transfer_infidelity > 1) {
      throw std::invalid_argument("transfer_infidelity must lie in [0,1]");
    }
  }
};

struct SpamRunResult {
  std::vector<ShotRecord> archive;  // interleaved |0>, |1> trials
  std::vector<InjectedBurst> injected_bursts;
  double prep_error = 0.0;  // deterministic 1 - pop(|0>) after the protocol
};

inline SpamRunResult run_spam_pipeline(const SpamPipelineConfig& cfg) {
  cfg.validate();
  const StateSpace space(cfg.species, {Manifold::S12, Manifold::D52});
  const std::size_t q0 = space.index(space.qubit_zero());
  const std::size_t q1 = space.index(space.qubit_one());

  const PopulationVector prep =
      run_protocol(cfg.protocol, space, delta_population(space, space.qubit_zero()));

  // cumulative distribution for per-trial state sampling
  std::vector<double> cdf(prep.probs.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < prep.probs.size(); ++i) {
    acc += prep.probs[i];
    cdf[i] = acc;
  }
  cdf.back() = 1.0;

  SpamRunResult res;
  res.prep_error = 1.0 - prep.probs[q0];
  const std::size_t n_shots = static_cast<std::size_t>(2 * cfg.trials_per_state);
  res.archive.resize(n_shots);

  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      SplitMix64 rng = shot_rng(cfg.seed, i);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      // sample prepared sublevel
      const double x = u(rng);
      std::size_t state = 0;
      while (state + 1 < cdf.size() && x > cdf[state]) ++state;
      const QubitPrep truth = (i % 2 == 0) ? QubitPrep::Zero : QubitPrep::One;
      if (truth == QubitPrep::One && state == q0) {
        if (u(rng) >= cfg.transfer_infidelity) state = q1;
      }
      res.archive[i] =
          simulate_readout(state == q0, truth, cfg.detection, cfg.shelving, rng);
    }
  };

  if (cfg.threads == 1) {
    worker(0, n_shots);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_shots + cfg.threads - 1) / cfg.threads;
    for (int t = 0; t < cfg.threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(n_shots, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  if (cfg.bursts) {
    res.injected_bursts = inject_correlated_errors(
        res.archive, *cfg.bursts, cfg.seed, cfg.detection.segment_us);
  }
  return res;
}

inline TrialTally tally_threshold(const SpamRunResult& res,
                                  const DetectionConfig& cfg) {
  std::vector<Label> labels;
  labels.reserve(res.archive.size());
  for (const auto& r : res.archive) {
    labels.push_back(classify_threshold(r, cfg.threshold_counts));
  }
  return tally_labels(res.archive, labels);
}

}  // namespace ionspam
