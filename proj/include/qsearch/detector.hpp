#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ranges>

#include "qsearch/distributions.hpp"
#include "qsearch/rng.hpp"

namespace qsearch {

enum class Verdict { continue_sampling, alarm };

struct StepDecision {
  Verdict verdict;
  double lr_value;
};

struct StreamResult {
  enum class Kind { alarm, initial_stop, exhausted };
  Kind kind;
  /// Alarm index (1-based), 0 for an initial stop, 0 when exhausted.
  std::int64_t tau;
  std::int64_t consumed;
};

/**
 * Shewhart likelihood-ratio test: alarm at the first t with l_t >= alpha.
 *
 * The decision depends on the current observation only. alpha is set so that
 * P0(l >= alpha) = 1/eta, which makes the run length under F0 geometric with
 * mean eta. Two optional randomizations exist for proof-level constructions:
 * an initial stop probability (stop at t = 0 before sampling) and an alarm
 * probability for l_t landing exactly on alpha. Unset boundary randomization
 * means the closed comparison l_t >= alpha.
 */
class ShewhartDetector {
 public:
  /// Closed-form calibration. eta must be finite and >= 1; eta = 1 yields alpha = 0.
  static ShewhartDetector calibrate(const DistributionPair& pair, double eta);

  /// Calibration from the empirical quantile of l(X), X ~ F0.
  static ShewhartDetector calibrate_monte_carlo(const DistributionPair& pair, double eta,
                                                std::size_t n_samples, Rng& rng);

  /// Explicit threshold; eta becomes the implied 1 / P0(l >= alpha).
  static ShewhartDetector with_threshold(const DistributionPair& pair, double alpha);

  const DistributionPair& pair() const noexcept { return pair_; }
  double alpha() const noexcept { return alpha_; }
  double log_alpha() const noexcept { return log_alpha_; }
  double eta() const noexcept { return eta_; }
  /// P0(l >= alpha) that the threshold achieves.
  double achieved_tail() const noexcept { return achieved_tail_; }
  double initial_stop_prob() const noexcept { return initial_stop_prob_; }
  std::optional<double> boundary_alarm_prob() const noexcept { return boundary_alarm_prob_; }

  ShewhartDetector with_initial_stop_prob(double p) const;
  ShewhartDetector with_boundary_randomization(double q) const;

  /// Only consumes randomness when l(x) == alpha and boundary randomization is set.
  StepDecision step(double x, Rng& rng) const;

  bool alarms(double x, Rng& rng) const {
    const double l = pair_.log_likelihood_ratio(x);
    if (l > log_alpha_) return true;
    if (l < log_alpha_) return false;
    return boundary_alarm_prob_ ? rng.bernoulli(*boundary_alarm_prob_) : true;
  }

  template <std::ranges::input_range R>
  StreamResult run_stream(R&& observations, Rng& rng) const {
    if (initial_stop_prob_ > 0.0 && rng.bernoulli(initial_stop_prob_)) {
      return {StreamResult::Kind::initial_stop, 0, 0};
    }
    std::int64_t t = 0;
    for (double x : observations) {
      ++t;
      if (alarms(x, rng)) return {StreamResult::Kind::alarm, t, t};
    }
    return {StreamResult::Kind::exhausted, 0, t};
  }

 private:
  ShewhartDetector(const DistributionPair& pair, double alpha, double eta, double achieved_tail);

  DistributionPair pair_;
  double alpha_;
  double log_alpha_;
  double eta_;
  double achieved_tail_;
  double initial_stop_prob_ = 0.0;
  std::optional<double> boundary_alarm_prob_;
};

/**
 * Initial stop probability that brings a rule with E0{nu | nu > 0} =
 * arl_given_positive down to E0{nu'} = eta exactly, keeping E0{l_nu}/E0{nu}.
 */
double initial_stop_prob_for_target(double eta, double arl_given_positive);

}  // namespace qsearch
