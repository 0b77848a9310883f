#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ionspam/detection.hpp"
#include "ionspam/rng.hpp"

namespace ionspam {

struct WilsonInterval {
  double low = 0.0;
  double high = 0.0;
};

// Wilson score interval for a binomial proportion; z = 1 gives the
// "one Wilson interval" error bars used throughout.
inline WilsonInterval wilson_interval(long long errors, long long n, double z) {
  if (n <= 0) throw std::invalid_argument("wilson_interval requires n > 0");
  if (errors < 0 || errors > n) {
    throw std::invalid_argument("wilson_interval requires 0 <= errors <= n");
  }
  const double p = static_cast<double>(errors) / static_cast<double>(n);
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct TrialTally {
  long long n_trials = 0;  // per prepared state
  long long errors_zero = 0;
  long long errors_one = 0;

  void validate() const {
    if (n_trials <= 0) throw std::invalid_argument("n_trials must be > 0");
    if (errors_zero < 0 || errors_zero > n_trials || errors_one < 0 ||
        errors_one > n_trials) {
      throw std::invalid_argument("error counts must lie in [0, n_trials]");
    }
  }
};

struct RateEstimate {
  double value = 0.0;
  WilsonInterval interval;
};

struct SpamSummary {
  RateEstimate zero;
  RateEstimate one;
  RateEstimate total;
};

inline SpamSummary spam_summary(const TrialTally& t, double z = 1.0) {
  t.validate();
  SpamSummary s;
  s.zero.value = static_cast<double>(t.errors_zero) / t.n_trials;
  s.zero.interval = wilson_interval(t.errors_zero, t.n_trials, z);
  s.one.value = static_cast<double>(t.errors_one) / t.n_trials;
  s.one.interval = wilson_interval(t.errors_one, t.n_trials, z);
  // equal trial counts per state: total is the mean, interval from pooled counts
  s.total.value = 0.5 * (s.zero.value + s.one.value);
  s.total.interval =
      wilson_interval(t.errors_zero + t.errors_one, 2 * t.n_trials, z);
  return s;
}

inline TrialTally tally_labels(const std::vector<ShotRecord>& recs,
                               const std::vector<Label>& labels) {
  if (recs.size() != labels.size()) {
    throw std::invalid_argument("records and labels differ in length");
  }
  long long nz = 0, no = 0, ez = 0, eo = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (recs[i].truth_state == QubitPrep::Zero) {
      ++nz;
      if (labels[i] == Label::Bright) ++ez;
    } else {
      ++no;
      if (labels[i] == Label::Dark) ++eo;
    }
  }
  if (nz != no) {
    throw std::invalid_argument("tally requires equal trial counts per state");
  }
  return TrialTally{nz, ez, eo};
}

// paper-style display: 9.6(1.4)e-05
inline std::string format_parenthetical(double value, double uncertainty) {
  if (value <= 0) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "0(%.1g)", uncertainty);
    return buf;
  }
  const int ex = static_cast<int>(std::floor(std::log10(value)));
  const double scale = std::pow(10.0, ex);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f(%.1f)e%+03d", value / scale,
                uncertainty / scale, ex);
  return buf;
}

// --- error budget -----------------------------------------------------------

enum class BudgetState { Zero, One };
enum class BudgetKind { Predicted, Measured };

struct BudgetEntry {
  std::string source;
  BudgetState state = BudgetState::Zero;
  double value = 0.0;
  double uncertainty = 0.0;
  BudgetKind kind = BudgetKind::Predicted;
};

struct ErrorBudget {
  std::vector<BudgetEntry> entries;  // inputs plus any derived leftover row
  double predicted_subtotal_zero = 0.0;
  double predicted_subtotal_one = 0.0;
  std::optional<double> measured_subtotal_zero;
  std::optional<double> measured_subtotal_one;
  std::optional<double> leftover_zero;  // state-prep upper bound
  bool consistent = true;
};

inline bool is_subtotal_row(const BudgetEntry& e) {
  return e.kind == BudgetKind::Measured &&
         e.source.find("ubtotal") != std::string::npos;
}

// Sums Predicted entries per state. When a measured subtotal row is present
// and no explicit state-preparation row exists for that state, the state-prep
// "leftover" upper bound (measured minus the other predicted contributions)
// is derived and appended.
inline ErrorBudget build_budget(const std::vector<BudgetEntry>& components) {
  ErrorBudget b;
  b.entries = components;
  bool has_prep_zero = false;
  for (const auto& e : components) {
    if (e.value < 0 || e.uncertainty < 0) {
      throw std::invalid_argument("budget values and uncertainties must be >= 0");
    }
    if (is_subtotal_row(e)) {
      (e.state == BudgetState::Zero ? b.measured_subtotal_zero
                                    : b.measured_subtotal_one) = e.value;
      continue;
    }
    if (e.kind == BudgetKind::Predicted) {
      (e.state == BudgetState::Zero ? b.predicted_subtotal_zero
                                    : b.predicted_subtotal_one) += e.value;
      if (e.state == BudgetState::Zero &&
          e.source.find("preparation") != std::string::npos) {
        has_prep_zero = true;
      }
    }
  }
  if (b.measured_subtotal_zero && !has_prep_zero) {
    const double leftover = *b.measured_subtotal_zero - b.predicted_subtotal_zero;
    b.leftover_zero = leftover;
    if (leftover < 0) b.consistent = false;  // inconsistent inputs
    BudgetEntry e;
    e.source = "|0> state preparation (leftover)";
    e.state = BudgetState::Zero;
    e.value = std::max(0.0, leftover);
    e.kind = BudgetKind::Predicted;
    b.entries.insert(b.entries.begin(), e);
    b.predicted_subtotal_zero += e.value;
  }
  return b;
}

// --- correlated (burst) errors ---------------------------------------------

// Bursts of consecutive bright-ish trials from background collisions: onset is
// Bernoulli per trial, run length uniform in the configured range, counts
// overwritten at an intermediate rate below a true bright ion.
struct BurstModel {
  double burst_rate_per_trial = 0.0;
  std::pair<int, int> burst_length_range{20, 30};
  double burst_count_rate_per_us = 5.0 / 35.0;  // 5 counts per 35 us segment

  void validate() const {
    if (burst_rate_per_trial < 0 || burst_rate_per_trial > 1) {
      throw std::invalid_argument("burst_rate_per_trial must lie in [0,1]");
    }
    if (burst_length_range.first < 1 ||
        burst_length_range.first > burst_length_range.second) {
      throw std::invalid_argument("burst length range must satisfy 1 <= min <= max");
    }
    if (burst_count_rate_per_us < 0) {
      throw std::invalid_argument("burst_count_rate_per_us must be >= 0");
    }
  }
};

struct InjectedBurst {
  std::size_t start = 0;
  int length = 0;
};

// Overwrites runs of consecutive archive records (both prepared states, since
// trials interleave) with intermediate-rate counts. Returns ground truth.
inline std::vector<InjectedBurst> inject_correlated_errors(
    std::vector<ShotRecord>& archive, const BurstModel& model,
    std::uint64_t seed, double segment_us = 35.0) {
  model.validate();
  std::vector<InjectedBurst> bursts;
  if (model.burst_rate_per_trial == 0.0 || archive.empty()) return bursts;
  SplitMix64 rng = shot_rng(seed, 0x6275727374ull);  // dedicated stream
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len_dist(model.burst_length_range.first,
                                              model.burst_length_range.second);
  const double mean = model.burst_count_rate_per_us * segment_us;
  std::poisson_distribution<int> pois(mean);
  for (std::size_t i = 0; i < archive.size(); ++i) {
    if (u(rng) >= model.burst_rate_per_trial) continue;
    const int len = len_dist(rng);
    const std::size_t end = std::min(archive.size(), i + len);
    for (std::size_t j = i; j < end; ++j) {
      for (auto& c : archive[j].segment_counts) c = mean > 0 ? pois(rng) : 0;
    }
    bursts.push_back({i, static_cast<int>(end - i)});
    i = end;  // bursts do not overlap
  }
  return bursts;
}

}  // namespace ionspam
