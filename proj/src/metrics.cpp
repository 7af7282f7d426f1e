#include "qsearch/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <string>

#include "qsearch/normal.hpp"
#include "qsearch/parallel.hpp"

namespace qsearch {

namespace {

// Stream tags: every estimator draws from its own family of derived streams.
enum Stream : std::uint64_t {
  kNullData = 1,
  kNullDecision,
  kDirectData,
  kDirectDecision,
  kRestartData,
  kRestartDecision,
  kStratifiedData,
  kStratifiedDecision,
  kMonitorData,
  kMonitorDecision,
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_trials(std::int64_t n_trials) {
  if (n_trials < 1) throw std::invalid_argument("n_trials must be at least 1");
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t key) { return mix64(seed ^ mix64(key)); }

// Runs the rule over the schedule's observations up to last_time. Returns the
// stopping time, or last_time + 1 when the run survives past it.
std::vector<std::int64_t> simulate_scheduled_runs(const StoppingRule& rule,
                                                  const DistributionPair& pair,
                                                  const ChangeSchedule& schedule,
                                                  std::int64_t last_time, std::int64_t n_trials,
                                                  const MonteCarloOptions& options,
                                                  std::vector<double>* last_pre_sample = nullptr) {
  std::vector<std::int64_t> taus(static_cast<std::size_t>(n_trials));
  if (last_pre_sample) last_pre_sample->assign(taus.size(), kNaN);
  const std::uint64_t data_tag = last_pre_sample ? kStratifiedData : kDirectData;
  const std::uint64_t decision_tag = last_pre_sample ? kStratifiedDecision : kDirectDecision;

  parallel_for(n_trials, options.workers, [&](std::int64_t begin, std::int64_t end) {
    auto local = rule.clone();
    for (std::int64_t i = begin; i < end; ++i) {
      Rng data = Rng::derive(options.seed, data_tag, static_cast<std::uint64_t>(i));
      Rng decision = Rng::derive(options.seed, decision_tag, static_cast<std::uint64_t>(i));
      local->reset();
      std::int64_t tau = last_time + 1;
      const double p0 = local->initial_stop_prob();
      if (p0 > 0.0 && decision.bernoulli(p0)) {
        tau = 0;
      } else {
        for (std::int64_t t = 1; t <= last_time; ++t) {
          const auto which = schedule.affected(t) ? Hypothesis::alternative : Hypothesis::nominal;
          const double x = sample(pair, which, data);
          if (last_pre_sample && t == last_time - 1) (*last_pre_sample)[static_cast<std::size_t>(i)] = x;
          if (local->observe(t, x, decision)) {
            tau = t;
            break;
          }
        }
      }
      taus[static_cast<std::size_t>(i)] = tau;
    }
  });
  return taus;
}

ConditionalEstimate make_conditional(std::int64_t hits, std::int64_t survivors,
                                     std::int64_t min_survivors) {
  ConditionalEstimate c;
  c.hits = hits;
  c.survivors = survivors;
  c.degenerate = survivors < std::max<std::int64_t>(1, min_survivors);
  if (survivors > 0) {
    const double n = static_cast<double>(survivors);
    c.probability = static_cast<double>(hits) / n;
    c.std_error = std::sqrt(c.probability * (1.0 - c.probability) / n);
  }
  return c;
}

ConditionalEstimate conditional_from_taus(std::span<const std::int64_t> taus, std::int64_t onset,
                                          std::int64_t min_survivors) {
  std::int64_t hits = 0;
  std::int64_t survivors = 0;
  for (std::int64_t tau : taus) {
    if (tau >= onset) ++survivors;
    if (tau == onset) ++hits;
  }
  return make_conditional(hits, survivors, min_survivors);
}

ConditionalEstimate memoryless_conditional(const StoppingRule& rule, const DistributionPair& pair,
                                           std::int64_t onset, std::size_t index,
                                           std::int64_t n_trials, const MonteCarloOptions& options) {
  std::vector<char> hit(static_cast<std::size_t>(n_trials));
  const std::uint64_t seed = sub_seed(options.seed, index);
  parallel_for(n_trials, options.workers, [&](std::int64_t begin, std::int64_t end) {
    auto local = rule.clone();
    for (std::int64_t j = begin; j < end; ++j) {
      Rng data = Rng::derive(seed, kRestartData, static_cast<std::uint64_t>(j));
      Rng decision = Rng::derive(seed, kRestartDecision, static_cast<std::uint64_t>(j));
      local->reset();
      const double x = sample(pair, Hypothesis::alternative, data);
      hit[static_cast<std::size_t>(j)] = local->observe(onset, x, decision) ? 1 : 0;
    }
  });
  const auto hits = static_cast<std::int64_t>(std::count(hit.begin(), hit.end(), 1));
  return make_conditional(hits, n_trials, options.min_survivors);
}

void check_index(const ChangeSchedule& schedule, std::size_t i) {
  if (i < 1 || i > schedule.size()) {
    throw std::invalid_argument("onset index " + std::to_string(i) + " outside 1.." +
                                std::to_string(schedule.size()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<NullRun> simulate_null_runs(const StoppingRule& rule, const DistributionPair& pair,
                                        std::int64_t n_trials, std::int64_t max_horizon,
                                        const MonteCarloOptions& options) {
  require_trials(n_trials);
  if (max_horizon < 1) throw ConfigError("max_horizon must be at least 1");
  std::vector<NullRun> runs(static_cast<std::size_t>(n_trials));
  parallel_for(n_trials, options.workers, [&](std::int64_t begin, std::int64_t end) {
    auto local = rule.clone();
    for (std::int64_t i = begin; i < end; ++i) {
      Rng data = Rng::derive(options.seed, kNullData, static_cast<std::uint64_t>(i));
      Rng decision = Rng::derive(options.seed, kNullDecision, static_cast<std::uint64_t>(i));
      local->reset();
      NullRun run{0, 0.0, true};
      const double p0 = local->initial_stop_prob();
      if (p0 > 0.0 && decision.bernoulli(p0)) {
        run.censored = false;
      } else {
        for (std::int64_t t = 1; t <= max_horizon; ++t) {
          const double x = sample(pair, Hypothesis::nominal, data);
          if (local->observe(t, x, decision)) {
            run = {t, likelihood_ratio(pair, x).value(), false};
            break;
          }
        }
      }
      runs[static_cast<std::size_t>(i)] = run;
    }
  });
  return runs;
}

ArlEstimate arl_from_runs(std::span<const NullRun> runs) {
  ArlEstimate est;
  double sum = 0.0;
  for (const auto& r : runs) {
    if (r.censored) {
      ++est.censored;
      continue;
    }
    sum += static_cast<double>(r.tau);
    ++est.n_used;
  }
  if (est.n_used == 0) {
    est.mean = est.std_error = kNaN;
    return est;
  }
  const double n = static_cast<double>(est.n_used);
  est.mean = sum / n;
  double ss = 0.0;
  for (const auto& r : runs) {
    if (!r.censored) ss += (static_cast<double>(r.tau) - est.mean) * (static_cast<double>(r.tau) - est.mean);
  }
  est.std_error = est.n_used > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return est;
}

ArlEstimate estimate_arl(const StoppingRule& rule, const DistributionPair& pair,
                         std::int64_t n_trials, std::int64_t max_horizon,
                         const MonteCarloOptions& options) {
  const auto runs = simulate_null_runs(rule, pair, n_trials, max_horizon, options);
  return arl_from_runs(runs);
}

ArlEstimate estimate_arl(const ShewhartDetector& detector, std::int64_t n_trials,
                         std::int64_t max_horizon, const MonteCarloOptions& options) {
  if (static_cast<double>(max_horizon) < 10.0 * detector.eta()) {
    throw ConfigError("max_horizon " + std::to_string(max_horizon) +
                      " is below 10 * eta; censoring would bias the run length");
  }
  return estimate_arl(ShewhartRule(detector), detector.pair(), n_trials, max_horizon, options);
}

BoundEstimate ratio_bound_from_runs(std::span<const NullRun> runs, std::int64_t s) {
  BoundEstimate est;
  double sum_lr = 0.0;
  double sum_tau = 0.0;
  for (const auto& r : runs) {
    if (r.censored) {
      ++est.censored;
      continue;
    }
    sum_lr += r.lr_at_stop;
    sum_tau += static_cast<double>(r.tau);
    ++est.n_used;
  }
  if (est.n_used == 0) {
    est.value = est.std_error = est.mean_lr = est.mean_tau = kNaN;
    return est;
  }
  const double n = static_cast<double>(est.n_used);
  est.mean_lr = sum_lr / n;
  est.mean_tau = sum_tau / n;
  const double ratio = est.mean_lr / est.mean_tau;
  est.value = static_cast<double>(s) * ratio;

  // Delta method for a ratio of means.
  double s_aa = 0.0, s_bb = 0.0, s_ab = 0.0;
  for (const auto& r : runs) {
    if (r.censored) continue;
    const double da = r.lr_at_stop - est.mean_lr;
    const double db = static_cast<double>(r.tau) - est.mean_tau;
    s_aa += da * da;
    s_bb += db * db;
    s_ab += da * db;
  }
  if (est.n_used > 1) {
    const double denom = n - 1.0;
    const double var = (s_aa - 2.0 * ratio * s_ab + ratio * ratio * s_bb) / denom /
                       (n * est.mean_tau * est.mean_tau);
    est.std_error = static_cast<double>(s) * std::sqrt(std::max(var, 0.0));
  }
  return est;
}

BoundEstimate estimate_ratio_bound(const StoppingRule& rule, const DistributionPair& pair,
                                      std::int64_t s, std::int64_t n_trials,
                                      std::int64_t max_horizon, const MonteCarloOptions& options) {
  if (s < 0) throw std::invalid_argument("s must be nonnegative");
  const auto runs = simulate_null_runs(rule, pair, n_trials, max_horizon, options);
  return ratio_bound_from_runs(runs, s);
}

// ---------------------------------------------------------------------------

ConditionalEstimate estimate_conditional_detection(const StoppingRule& rule,
                                                   const DistributionPair& pair,
                                                   const ChangeSchedule& schedule, std::size_t i,
                                                   std::int64_t n_trials,
                                                   const MonteCarloOptions& options,
                                                   ConditioningMethod method) {
  require_trials(n_trials);
  check_index(schedule, i);
  const std::int64_t onset = schedule.onsets()[i - 1];
  if (method == ConditioningMethod::memoryless_restart) {
    if (!rule.memoryless()) {
      throw std::invalid_argument("memoryless_restart needs a memoryless rule, got " + rule.name());
    }
    return memoryless_conditional(rule, pair, onset, i, n_trials, options);
  }
  const auto taus = simulate_scheduled_runs(rule, pair, schedule, onset, n_trials, options);
  return conditional_from_taus(taus, onset, options.min_survivors);
}

PollakEstimate estimate_pollak(const StoppingRule& rule, const DistributionPair& pair,
                               const ChangeSchedule& schedule, std::int64_t n_trials,
                               const MonteCarloOptions& options, ConditioningMethod method) {
  require_trials(n_trials);
  PollakEstimate est;
  if (schedule.empty()) return est;

  if (method == ConditioningMethod::memoryless_restart) {
    if (!rule.memoryless()) {
      throw std::invalid_argument("memoryless_restart needs a memoryless rule, got " + rule.name());
    }
    for (std::size_t i = 1; i <= schedule.size(); ++i) {
      est.per_onset.push_back(
          memoryless_conditional(rule, pair, schedule.onsets()[i - 1], i, n_trials, options));
    }
  } else {
    // One pass up to the last onset serves every index.
    const auto taus =
        simulate_scheduled_runs(rule, pair, schedule, schedule.onsets().back(), n_trials, options);
    for (std::int64_t onset : schedule.onsets()) {
      est.per_onset.push_back(conditional_from_taus(taus, onset, options.min_survivors));
    }
  }

  double var = 0.0;
  for (const auto& c : est.per_onset) {
    if (c.degenerate) {
      ++est.degenerate_count;
      continue;
    }
    est.value += c.probability;
    var += c.std_error * c.std_error;
  }
  est.std_error = std::sqrt(var);
  return est;
}

StratifiedDetection stratified_detection_test(const StoppingRule& rule, const DistributionPair& pair,
                                              const ChangeSchedule& schedule, std::size_t i,
                                              std::int64_t n_trials, int n_bins,
                                              const MonteCarloOptions& options) {
  require_trials(n_trials);
  check_index(schedule, i);
  if (n_bins < 1) throw std::invalid_argument("n_bins must be at least 1");
  const std::int64_t onset = schedule.onsets()[i - 1];

  std::vector<double> previous;
  const auto taus = simulate_scheduled_runs(rule, pair, schedule, onset, n_trials, options, &previous);

  StratifiedDetection out;
  const int bins = onset > 1 ? n_bins : 1;
  out.hits.assign(static_cast<std::size_t>(bins), 0);
  out.survivors.assign(static_cast<std::size_t>(bins), 0);
  for (std::size_t j = 0; j < taus.size(); ++j) {
    if (taus[j] < onset) continue;
    int bin = 0;
    if (bins > 1) {
      // X_{gamma_i - 1} ~ F0 always (gaps exceed T), so F0 quantiles give equiprobable bins.
      const double u = standard_normal_cdf((previous[j] - pair.mean0()) / pair.sigma());
      bin = std::min(bins - 1, static_cast<int>(u * bins));
    }
    ++out.survivors[static_cast<std::size_t>(bin)];
    if (taus[j] == onset) ++out.hits[static_cast<std::size_t>(bin)];
  }

  std::int64_t total_hits = 0, total = 0;
  int populated = 0;
  for (int b = 0; b < bins; ++b) {
    total_hits += out.hits[static_cast<std::size_t>(b)];
    total += out.survivors[static_cast<std::size_t>(b)];
    if (out.survivors[static_cast<std::size_t>(b)] > 0) ++populated;
  }
  if (populated < 2 || total_hits == 0 || total_hits == total) return out;

  const double pooled = static_cast<double>(total_hits) / static_cast<double>(total);
  for (int b = 0; b < bins; ++b) {
    const auto n_b = static_cast<double>(out.survivors[static_cast<std::size_t>(b)]);
    if (n_b == 0.0) continue;
    const auto h_b = static_cast<double>(out.hits[static_cast<std::size_t>(b)]);
    const double e_hit = n_b * pooled;
    const double e_miss = n_b * (1.0 - pooled);
    out.chi_square += (h_b - e_hit) * (h_b - e_hit) / e_hit +
                      (n_b - h_b - e_miss) * (n_b - h_b - e_miss) / e_miss;
  }
  out.dof = populated - 1;
  boost::math::chi_squared dist(out.dof);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.chi_square));
  return out;
}

Estimate estimate_lorden(const StoppingRule& rule, const DistributionPair& pair,
                         const ChangeSchedule& schedule, std::int64_t n_trials, int n_bins,
                         const MonteCarloOptions& options) {
  if (rule.memoryless()) {
    const auto pollak = estimate_pollak(rule, pair, schedule, n_trials, options);
    return {pollak.value, pollak.std_error};
  }
  Estimate est;
  double var = 0.0;
  for (std::size_t i = 1; i <= schedule.size(); ++i) {
    const auto strat = stratified_detection_test(rule, pair, schedule, i, n_trials, n_bins, options);
    std::optional<ConditionalEstimate> worst;
    for (std::size_t b = 0; b < strat.hits.size(); ++b) {
      const auto c = make_conditional(strat.hits[b], strat.survivors[b], options.min_survivors);
      if (c.degenerate) continue;
      if (!worst || c.probability < worst->probability) worst = c;
    }
    if (!worst) continue;
    est.value += worst->probability;
    var += worst->std_error * worst->std_error;
  }
  est.std_error = std::sqrt(var);
  return est;
}

// ---------------------------------------------------------------------------

std::string_view to_string(MonitoringMode mode) noexcept {
  return mode == MonitoringMode::single_shot ? "single_shot" : "restart";
}

MonitoringMode monitoring_mode_from_string(std::string_view name) {
  if (name == "single_shot") return MonitoringMode::single_shot;
  if (name == "restart") return MonitoringMode::restart;
  throw std::invalid_argument("unknown monitoring mode '" + std::string(name) + "'");
}

TrialOutcome run_monitoring(const ShewhartDetector& detector, const ChangeSchedule& schedule,
                            MonitoringMode mode, Rng& data_rng, Rng& decision_rng) {
  TrialOutcome out;
  const DistributionPair& pair = detector.pair();
  const double p0 = detector.initial_stop_prob();
  if (p0 > 0.0 && decision_rng.bernoulli(p0)) {
    out.alarms.push_back({0, AlarmKind::false_alarm});
    if (mode == MonitoringMode::single_shot) {
      out.tau = 0;
      return out;
    }
  }

  const auto& onsets = schedule.onsets();
  auto next = onsets.begin();
  std::int64_t window_end = 0;
  for (std::int64_t t = 1; t <= schedule.horizon(); ++t) {
    bool onset = false;
    if (next != onsets.end() && *next == t) {
      onset = true;
      window_end = t + schedule.duration() - 1;
      ++next;
    }
    const auto which = t <= window_end ? Hypothesis::alternative : Hypothesis::nominal;
    const double x = sample(pair, which, data_rng);
    if (!detector.alarms(x, decision_rng)) {
      if (onset) ++out.missed_onsets_before_detection;
      continue;
    }
    out.alarms.push_back({t, onset ? AlarmKind::true_onset : AlarmKind::false_alarm});
    if (onset) out.first_detection_time = t;
    if (onset || mode == MonitoringMode::single_shot) {
      out.tau = t;
      return out;
    }
  }
  return out;
}

MonitoringSummary summarize_monitoring(const ShewhartDetector& detector,
                                       const ChangeSchedule& schedule, MonitoringMode mode,
                                       std::int64_t n_trials, const MonteCarloOptions& options) {
  require_trials(n_trials);
  struct Compact {
    bool first = false;
    bool any = false;
    bool censored = false;
    std::int64_t missed = 0;
  };
  std::vector<Compact> results(static_cast<std::size_t>(n_trials));
  const std::int64_t first_onset = schedule.empty() ? -1 : schedule.onsets().front();
  parallel_for(n_trials, options.workers, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      Rng data = Rng::derive(options.seed, kMonitorData, static_cast<std::uint64_t>(i));
      Rng decision = Rng::derive(options.seed, kMonitorDecision, static_cast<std::uint64_t>(i));
      const TrialOutcome o = run_monitoring(detector, schedule, mode, data, decision);
      Compact& c = results[static_cast<std::size_t>(i)];
      c.any = o.first_detection_time.has_value();
      c.first = c.any && *o.first_detection_time == first_onset;
      c.censored = !o.tau.has_value();
      c.missed = o.missed_onsets_before_detection;
    }
  });

  MonitoringSummary sum;
  std::int64_t first = 0;
  double missed_sum = 0.0;
  for (const auto& c : results) {
    if (c.first) ++first;
    if (c.censored) ++sum.n_censored;
    if (c.any) {
      ++sum.n_detected;
      missed_sum += static_cast<double>(c.missed);
    }
  }
  const double n = static_cast<double>(n_trials);
  auto binomial = [n](std::int64_t k) {
    const double p = static_cast<double>(k) / n;
    return Estimate{p, std::sqrt(p * (1.0 - p) / n)};
  };
  sum.detect_first = binomial(first);
  sum.detect_any = binomial(sum.n_detected);
  if (sum.n_detected == 0) {
    sum.avg_missed = {kNaN, kNaN};
  } else {
    const double nd = static_cast<double>(sum.n_detected);
    const double mean = missed_sum / nd;
    double ss = 0.0;
    for (const auto& c : results) {
      if (c.any) ss += (static_cast<double>(c.missed) - mean) * (static_cast<double>(c.missed) - mean);
    }
    sum.avg_missed = {mean, sum.n_detected > 1 ? std::sqrt(ss / (nd - 1.0) / nd) : 0.0};
  }
  return sum;
}

std::vector<CurveRow> detect_first_any_curves(const DistributionPair& pair,
                                              const ChangeSchedule& schedule,
                                              std::span<const double> eta_list,
                                              std::int64_t n_trials, MonitoringMode mode,
                                              const MonteCarloOptions& options) {
  if (eta_list.empty()) throw std::invalid_argument("eta_list must not be empty");
  std::vector<CurveRow> rows;
  for (std::size_t k = 0; k < eta_list.size(); ++k) {
    const auto detector = ShewhartDetector::calibrate(pair, eta_list[k]);
    MonteCarloOptions sub = options;
    sub.seed = sub_seed(options.seed, k);
    rows.push_back({eta_list[k], summarize_monitoring(detector, schedule, mode, n_trials, sub)});
  }
  return rows;
}

CriteriaReport evaluate_criteria(const ShewhartDetector& detector, const ChangeSchedule& schedule,
                                 const CriteriaSettings& settings, const MonteCarloOptions& options) {
  if (settings.arl_horizon_factor < 10.0) {
    throw ConfigError("arl_horizon_factor must be at least 10");
  }
  CriteriaReport report;
  MonteCarloOptions sub = options;

  sub.seed = sub_seed(options.seed, 1);
  const auto mon = summarize_monitoring(detector, schedule, settings.mode, settings.n_trials, sub);
  report.detect_first = mon.detect_first;
  report.detect_any = mon.detect_any;
  report.avg_missed = mon.avg_missed;

  sub.seed = sub_seed(options.seed, 2);
  const ShewhartRule rule(detector);
  const auto max_horizon = std::max<std::int64_t>(
      10, static_cast<std::int64_t>(std::ceil(settings.arl_horizon_factor * detector.eta())));
  const auto runs = simulate_null_runs(rule, detector.pair(), settings.n_trials, max_horizon, sub);
  const auto arl = arl_from_runs(runs);
  report.arl_to_false_alarm = {arl.mean, arl.std_error};
  report.arl_censored = arl.censored;
  const auto bound = ratio_bound_from_runs(runs, static_cast<std::int64_t>(schedule.size()));
  report.ratio_bound = {bound.value, bound.std_error};

  sub.seed = sub_seed(options.seed, 3);
  const auto pollak = estimate_pollak(rule, detector.pair(), schedule, settings.n_trials, sub,
                                      ConditioningMethod::memoryless_restart);
  report.pollak = {pollak.value, pollak.std_error};
  report.degenerate_onsets = pollak.degenerate_count;
  // Memoryless rule: the conditional probability is constant over histories.
  report.lorden = report.pollak;
  return report;
}

}  // namespace qsearch
