#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "qsearch/detector.hpp"
#include "qsearch/distributions.hpp"
#include "qsearch/rng.hpp"
#include "qsearch/sequence_model.hpp"
#include "qsearch/stopping_rule.hpp"

namespace qsearch {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

struct MonteCarloOptions {
  std::uint64_t seed = 0;
  /// 0 = hardware concurrency. Never changes results.
  unsigned workers = 1;
  /// Conditional estimates backed by fewer surviving runs are flagged degenerate.
  std::int64_t min_survivors = 100;
};

// ---------------------------------------------------------------------------
// Pure-F0 runs: run length to false alarm and the upper bound on the criteria.

struct NullRun {
  /// Stopping time; 0 for an initial stop. Meaningless when censored.
  std::int64_t tau = 0;
  /// l at the stopping sample, 0 for an initial stop.
  double lr_at_stop = 0.0;
  bool censored = false;
};

std::vector<NullRun> simulate_null_runs(const StoppingRule& rule, const DistributionPair& pair,
                                        std::int64_t n_trials, std::int64_t max_horizon,
                                        const MonteCarloOptions& options);

struct ArlEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t censored = 0;
  std::int64_t n_used = 0;
};

ArlEstimate arl_from_runs(std::span<const NullRun> runs);

/// E0{tau} for a calibrated detector. Throws ConfigError if max_horizon < 10 * eta.
ArlEstimate estimate_arl(const ShewhartDetector& detector, std::int64_t n_trials,
                         std::int64_t max_horizon, const MonteCarloOptions& options);

ArlEstimate estimate_arl(const StoppingRule& rule, const DistributionPair& pair,
                         std::int64_t n_trials, std::int64_t max_horizon,
                         const MonteCarloOptions& options);

struct BoundEstimate {
  /// s * E0{l_tau} / E0{tau}, delta-method standard error.
  double value = 0.0;
  double std_error = 0.0;
  double mean_lr = 0.0;
  double mean_tau = 0.0;
  std::int64_t censored = 0;
  std::int64_t n_used = 0;
};

BoundEstimate ratio_bound_from_runs(std::span<const NullRun> runs, std::int64_t s);

BoundEstimate estimate_ratio_bound(const StoppingRule& rule, const DistributionPair& pair,
                                      std::int64_t s, std::int64_t n_trials,
                                      std::int64_t max_horizon, const MonteCarloOptions& options);

// ---------------------------------------------------------------------------
// Detection exactly at an onset, conditioned on surviving to it.

enum class ConditioningMethod {
  /// Simulate the schedule, keep runs with tau >= gamma_i, count tau == gamma_i.
  direct,
  /// Memoryless rules only: one fresh decision on an F1 sample per trial.
  memoryless_restart,
};

struct ConditionalEstimate {
  double probability = 0.0;
  double std_error = 0.0;
  std::int64_t hits = 0;
  std::int64_t survivors = 0;
  bool degenerate = false;
};

/// P(tau = gamma_i | tau >= gamma_i), i is 1-based.
ConditionalEstimate estimate_conditional_detection(const StoppingRule& rule,
                                                   const DistributionPair& pair,
                                                   const ChangeSchedule& schedule, std::size_t i,
                                                   std::int64_t n_trials,
                                                   const MonteCarloOptions& options,
                                                   ConditioningMethod method = ConditioningMethod::direct);

struct PollakEstimate {
  /// Sum over non-degenerate onsets; 0 for an empty schedule.
  double value = 0.0;
  double std_error = 0.0;
  std::vector<ConditionalEstimate> per_onset;
  std::int64_t degenerate_count = 0;
};

PollakEstimate estimate_pollak(const StoppingRule& rule, const DistributionPair& pair,
                               const ChangeSchedule& schedule, std::int64_t n_trials,
                               const MonteCarloOptions& options,
                               ConditioningMethod method = ConditioningMethod::direct);

/**
 * Detection at gamma_i split by the F0-quantile bin of the preceding sample
 * X_{gamma_i - 1}, with a chi-square test of homogeneity across bins.
 */
struct StratifiedDetection {
  std::vector<std::int64_t> hits;
  std::vector<std::int64_t> survivors;
  double chi_square = 0.0;
  int dof = 0;
  /// 1 when fewer than two bins are populated.
  double p_value = 1.0;
};

StratifiedDetection stratified_detection_test(const StoppingRule& rule, const DistributionPair& pair,
                                              const ChangeSchedule& schedule, std::size_t i,
                                              std::int64_t n_trials, int n_bins,
                                              const MonteCarloOptions& options);

/**
 * Lorden-like inner quantity. For memoryless rules the conditional probability
 * does not depend on the history, so this is the Pollak estimate itself. For
 * other rules each onset contributes the minimum over history bins, an
 * approximation of the essential infimum.
 */
Estimate estimate_lorden(const StoppingRule& rule, const DistributionPair& pair,
                         const ChangeSchedule& schedule, std::int64_t n_trials, int n_bins,
                         const MonteCarloOptions& options);

// ---------------------------------------------------------------------------
// Monitoring a scheduled stream.

enum class MonitoringMode { single_shot, restart };

std::string_view to_string(MonitoringMode mode) noexcept;
MonitoringMode monitoring_mode_from_string(std::string_view name);

enum class AlarmKind { true_onset, false_alarm };

struct Alarm {
  std::int64_t time;
  AlarmKind kind;
  friend bool operator==(const Alarm&, const Alarm&) = default;
};

struct TrialOutcome {
  /// Terminating time; nullopt when the horizon ran out first.
  std::optional<std::int64_t> tau;
  std::vector<Alarm> alarms;
  std::optional<std::int64_t> first_detection_time;
  /// Onsets passed without an alarm before the run ended.
  std::int64_t missed_onsets_before_detection = 0;
};

/**
 * single_shot stops at the first alarm. restart logs false alarms and keeps
 * going until an alarm lands on an onset or the horizon ends. Observations are
 * drawn from data_rng one per step in time order, exactly as generate_sequence
 * draws them; detector randomization uses decision_rng.
 */
TrialOutcome run_monitoring(const ShewhartDetector& detector, const ChangeSchedule& schedule,
                            MonitoringMode mode, Rng& data_rng, Rng& decision_rng);

struct MonitoringSummary {
  Estimate detect_first;
  Estimate detect_any;
  /// Over runs that detected; NaN if none did.
  Estimate avg_missed;
  std::int64_t n_detected = 0;
  std::int64_t n_censored = 0;
};

MonitoringSummary summarize_monitoring(const ShewhartDetector& detector,
                                       const ChangeSchedule& schedule, MonitoringMode mode,
                                       std::int64_t n_trials, const MonteCarloOptions& options);

struct CurveRow {
  double eta = 0.0;
  MonitoringSummary summary;
};

std::vector<CurveRow> detect_first_any_curves(const DistributionPair& pair,
                                              const ChangeSchedule& schedule,
                                              std::span<const double> eta_list,
                                              std::int64_t n_trials, MonitoringMode mode,
                                              const MonteCarloOptions& options);

// ---------------------------------------------------------------------------

struct CriteriaReport {
  Estimate pollak;
  Estimate lorden;
  Estimate arl_to_false_alarm;
  Estimate ratio_bound;
  Estimate detect_first;
  Estimate detect_any;
  Estimate avg_missed;
  std::int64_t arl_censored = 0;
  std::int64_t degenerate_onsets = 0;
};

struct CriteriaSettings {
  std::int64_t n_trials = 2000;
  MonitoringMode mode = MonitoringMode::restart;
  /// Null-run horizon as a multiple of eta (at least 10).
  double arl_horizon_factor = 20.0;
};

/// Every criterion for one calibrated Shewhart detector on one schedule.
CriteriaReport evaluate_criteria(const ShewhartDetector& detector, const ChangeSchedule& schedule,
                                 const CriteriaSettings& settings, const MonteCarloOptions& options);

}  // namespace qsearch
