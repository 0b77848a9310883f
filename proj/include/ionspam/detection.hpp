#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ionspam/rng.hpp"

namespace ionspam {

enum class QubitPrep { Zero, One };
enum class Label { Bright, Dark };

// Three successive 1762 nm pi-pulses parking |0> in separate D5/2 sublevels.
struct ShelvingConfig {
  std::array<double, 3> pulse_fidelities{0.99, 0.99, 0.99};
  std::array<double, 3> pulse_durations_us{165.0, 45.0, 55.0};

  void validate() const {
    for (double f : pulse_fidelities) {
      if (f < 0 || f > 1) throw std::invalid_argument("pulse fidelity must lie in [0,1]");
    }
    for (double d : pulse_durations_us) {
      if (!(d >= 0)) throw std::invalid_argument("pulse durations must be >= 0");
    }
  }

  // Interval during which a shelved ion can decay into a bright error.
  // Decays during pulse 1 are excluded: pulses 2 and 3 would re-shelve them.
  double shelved_interval_us(double detection_us) const {
    return pulse_durations_us[1] + pulse_durations_us[2] + detection_us;
  }
};

// the ion stays bright only if all three pulses fail
inline double cabinet_unshelved_probability(const ShelvingConfig& c) {
  double p = 1.0;
  for (double f : c.pulse_fidelities) p *= (1.0 - f);
  return p;
}

struct DetectionConfig {
  int n_segments = 10;
  double segment_us = 35.0;
  // 20 and 0.01 expected counts per 35 us segment: histograms well separated,
  // and the threshold sits just above the dark distribution so that partially
  // bright decay shots still read as errors.
  double bright_rate_per_us = 20.0 / 35.0;
  double dark_rate_per_us = 0.01 / 35.0;
  double d52_lifetime_s = 30.1;
  double bayes_confidence = 1e-6;
  int threshold_counts = 5;

  double window_us() const { return n_segments * segment_us; }

  void validate() const {
    if (n_segments < 1) throw std::invalid_argument("n_segments must be >= 1");
    if (!(segment_us > 0)) throw std::invalid_argument("segment_us must be > 0");
    if (dark_rate_per_us < 0) throw std::invalid_argument("dark rate must be >= 0");
    if (!(bright_rate_per_us > dark_rate_per_us)) {
      throw std::invalid_argument("bright rate must exceed dark rate");
    }
    if (!(d52_lifetime_s > 0)) throw std::invalid_argument("d52_lifetime_s must be > 0");
    if (!(bayes_confidence > 0) || bayes_confidence >= 0.5) {
      throw std::invalid_argument("bayes_confidence must lie in (0, 0.5)");
    }
    if (threshold_counts < 0) throw std::invalid_argument("threshold_counts must be >= 0");
  }
};

struct ShotRecord {
  std::vector<int> segment_counts;
  QubitPrep truth_state = QubitPrep::Zero;
  // decay time relative to detection start; negative means the ion decayed
  // during shelve pulses 2-3, before the detection window opened
  std::optional<double> truth_decay_time_us;

  int total_counts() const {
    return std::accumulate(segment_counts.begin(), segment_counts.end(), 0);
  }
};

inline double decay_probability(double interval_us, double lifetime_s) {
  return -std::expm1(-(interval_us * 1e-6) / lifetime_s);
}

// Segment counts of a shelved ion decaying at decay_time_us (relative to
// detection start; +inf for no decay). Counts are Poisson at the dark rate
// before the decay and the bright rate after, pro-rated within the decay
// segment.
template <class Rng>
std::vector<int> sample_segment_counts_dark(double decay_time_us,
                                            const DetectionConfig& cfg,
                                            Rng& rng) {
  std::vector<int> counts(static_cast<std::size_t>(cfg.n_segments), 0);
  for (int s = 0; s < cfg.n_segments; ++s) {
    const double t0 = s * cfg.segment_us;
    const double t1 = t0 + cfg.segment_us;
    double mean;
    if (decay_time_us <= t0) {
      mean = cfg.bright_rate_per_us * cfg.segment_us;
    } else if (decay_time_us >= t1) {
      mean = cfg.dark_rate_per_us * cfg.segment_us;
    } else {
      mean = cfg.dark_rate_per_us * (decay_time_us - t0) +
             cfg.bright_rate_per_us * (t1 - decay_time_us);
    }
    if (mean > 0) {
      std::poisson_distribution<int> pois(mean);
      counts[static_cast<std::size_t>(s)] = pois(rng);
    }
  }
  return counts;
}

template <class Rng>
std::vector<int> sample_segment_counts_bright(const DetectionConfig& cfg,
                                              Rng& rng) {
  std::poisson_distribution<int> pois(cfg.bright_rate_per_us * cfg.segment_us);
  std::vector<int> counts(static_cast<std::size_t>(cfg.n_segments), 0);
  for (auto& c : counts) c = pois(rng);
  return counts;
}

// One fluorescence shot. in_qubit_zero selects whether cabinet shelving is
// attempted; anything else fluoresces at the bright rate throughout.
template <class Rng>
ShotRecord simulate_readout(bool in_qubit_zero, QubitPrep truth,
                            const DetectionConfig& cfg,
                            const ShelvingConfig& shelving, Rng& rng) {
  cfg.validate();
  shelving.validate();
  ShotRecord rec;
  rec.truth_state = truth;

  bool dark = false;
  if (in_qubit_zero) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    dark = !(u(rng) < cabinet_unshelved_probability(shelving));
  }
  if (!dark) {
    rec.segment_counts = sample_segment_counts_bright(cfg, rng);
    return rec;
  }

  const double offset_us =
      shelving.pulse_durations_us[1] + shelving.pulse_durations_us[2];
  const double shelved_us = shelving.shelved_interval_us(cfg.window_us());
  double decay_us = std::numeric_limits<double>::infinity();
  if (std::isfinite(cfg.d52_lifetime_s)) {
    std::exponential_distribution<double> expo(1.0 / (cfg.d52_lifetime_s * 1e6));
    const double t = expo(rng);
    if (t < shelved_us) {
      decay_us = t - offset_us;  // may be negative (decay before detection)
      rec.truth_decay_time_us = decay_us;
    }
  }
  rec.segment_counts = sample_segment_counts_dark(decay_us, cfg, rng);
  return rec;
}

template <class Rng>
ShotRecord simulate_shot(QubitPrep prepared, const DetectionConfig& cfg,
                         const ShelvingConfig& shelving, Rng& rng) {
  return simulate_readout(prepared == QubitPrep::Zero, prepared, cfg, shelving,
                          rng);
}

inline Label classify_threshold(const ShotRecord& rec, int threshold_counts) {
  return rec.total_counts() > threshold_counts ? Label::Bright : Label::Dark;
}

struct BayesResult {
  Label label = Label::Dark;
  int segments_used = 0;
  double posterior_bright = 0.5;
  double posterior_dark = 0.5;
};

namespace detail {

// log Poisson pmf with a floor so a misspecified zero rate cannot lock the
// posterior at exactly zero
inline double log_poisson_pmf(int k, double mean) {
  constexpr double kFloor = -690.7755278982137;  // log(1e-300)
  if (mean <= 0) return k == 0 ? 0.0 : kFloor;
  const double lp = k * std::log(mean) - mean - std::lgamma(k + 1.0);
  return std::max(lp, kFloor);
}

}  // namespace detail

// Posterior (bright, dark) after each consumed segment, starting from the
// uniform prior; renormalized every update.
inline std::vector<std::pair<double, double>> bayes_posterior_trace(
    const ShotRecord& rec, const DetectionConfig& cfg) {
  cfg.validate();
  if (rec.segment_counts.size() != static_cast<std::size_t>(cfg.n_segments)) {
    throw std::invalid_argument("record has wrong number of segments");
  }
  const double mb = cfg.bright_rate_per_us * cfg.segment_us;
  const double md = cfg.dark_rate_per_us * cfg.segment_us;
  std::vector<std::pair<double, double>> trace;
  trace.reserve(rec.segment_counts.size());
  double llb = 0.0, lld = 0.0;
  for (int k : rec.segment_counts) {
    llb += detail::log_poisson_pmf(k, mb);
    lld += detail::log_poisson_pmf(k, md);
    const double pb = 1.0 / (1.0 + std::exp(lld - llb));
    trace.emplace_back(pb, 1.0 - pb);
    if (std::min(pb, 1.0 - pb) < cfg.bayes_confidence) break;
  }
  return trace;
}

// Segmented sequential classifier: stops as soon as the losing hypothesis
// drops below bayes_confidence, or after all segments.
inline BayesResult classify_bayes(const ShotRecord& rec,
                                  const DetectionConfig& cfg) {
  const auto trace = bayes_posterior_trace(rec, cfg);
  BayesResult r;
  r.segments_used = static_cast<int>(trace.size());
  r.posterior_bright = trace.back().first;
  r.posterior_dark = trace.back().second;
  r.label = r.posterior_bright >= r.posterior_dark ? Label::Bright : Label::Dark;
  return r;
}

// Real-time early-stop mode: the measurement ends at the stopping segment, so
// later counts are discarded from the record.
inline ShotRecord truncate_at_stop(const ShotRecord& rec,
                                   const DetectionConfig& cfg) {
  const auto res = classify_bayes(rec, cfg);
  ShotRecord out = rec;
  out.segment_counts.resize(static_cast<std::size_t>(res.segments_used));
  return out;
}

// Shots the threshold calls bright but the segmented classifier calls dark:
// the statistical signature of a mid-detection D5/2 decay.
inline std::vector<std::size_t> flag_decays(const std::vector<ShotRecord>& recs,
                                            const DetectionConfig& cfg) {
  std::vector<std::size_t> flagged;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (classify_threshold(recs[i], cfg.threshold_counts) == Label::Bright &&
        classify_bayes(recs[i], cfg).label == Label::Dark) {
      flagged.push_back(i);
    }
  }
  return flagged;
}

}  // namespace ionspam
