#include <cmath>
#include <vector>

#include "doctest.h"
#include "qsearch/metrics.hpp"
#include "qsearch/normal.hpp"

using namespace qsearch;

namespace {

const DistributionPair kUnit = DistributionPair::gaussian_mean_shift(0.0, 1.0, 1.0);

// P1(l >= alpha) for a unit-variance shift of mu.
double detection_oracle(double mu, double eta) {
  return standard_normal_cdf(mu - standard_normal_upper_quantile(1.0 / eta));
}

MonteCarloOptions opts(std::uint64_t seed, unsigned workers = 1) {
  MonteCarloOptions o;
  o.seed = seed;
  o.workers = workers;
  return o;
}

bool within(double estimate, double truth, double se, double k = 3.0) {
  return std::fabs(estimate - truth) <= k * se;
}

// Alarms when two consecutive samples sum past a level: the decision looks back one step.
class PairSumRule final : public StoppingRule {
 public:
  explicit PairSumRule(double level) : level_(level) {}
  std::unique_ptr<StoppingRule> clone() const override { return std::make_unique<PairSumRule>(*this); }
  std::string name() const override { return "pair-sum"; }
  void reset() override { previous_ = -INFINITY; }
  bool observe(std::int64_t, double x, Rng&) override {
    const bool stop = previous_ + x > level_;
    previous_ = x;
    return stop;
  }

 private:
  double level_;
  double previous_ = -INFINITY;
};

}  // namespace

TEST_CASE("ARL at eta = 1 is exactly one") {
  const auto d = ShewhartDetector::calibrate(kUnit, 1.0);
  const auto arl = estimate_arl(d, 1000, 10, opts(1));
  CHECK(arl.mean == 1.0);
  CHECK(arl.std_error == 0.0);
  CHECK(arl.censored == 0);
}

TEST_CASE("ARL matches eta") {
  for (double eta : {10.0, 100.0}) {
    const auto d = ShewhartDetector::calibrate(kUnit, eta);
    const auto arl = estimate_arl(d, 100000, static_cast<std::int64_t>(100 * eta), opts(2));
    CHECK(within(arl.mean, eta, arl.std_error));
    // Geometric standard deviation sqrt(eta^2 - eta).
    CHECK(arl.std_error == doctest::Approx(std::sqrt(eta * eta - eta) / std::sqrt(1e5)).epsilon(0.05));
    CHECK(arl.censored == 0);
  }
}

TEST_CASE("ARL horizon must cover ten eta") {
  const auto d = ShewhartDetector::calibrate(kUnit, 100.0);
  CHECK_THROWS_AS(estimate_arl(d, 10, 999, opts(1)), ConfigError);
  CHECK_NOTHROW(estimate_arl(d, 10, 1000, opts(1)));
  CHECK_THROWS_AS(estimate_arl(d, 0, 1000, opts(1)), std::invalid_argument);
}

TEST_CASE("censored runs are counted, not averaged") {
  const FixedTimeRule late(50);
  const auto arl = estimate_arl(late, kUnit, 100, 20, opts(3));
  CHECK(arl.censored == 100);
  CHECK(arl.n_used == 0);
  CHECK(std::isnan(arl.mean));
}

TEST_CASE("conditional detection at a single onset") {
  const ChangeSchedule first({1}, 1, 10);
  const ShewhartRule always(ShewhartDetector::calibrate(kUnit, 1.0));
  const auto c = estimate_conditional_detection(always, kUnit, first, 1, 1000, opts(4));
  CHECK(c.probability == 1.0);
  CHECK(c.survivors == 1000);

  const ChangeSchedule mid({20}, 1, 40);
  for (double mu : {1.0, 3.0}) {
    const auto pair = DistributionPair::gaussian_mean_shift(0.0, mu, 1.0);
    const ShewhartRule rule(ShewhartDetector::calibrate(pair, 100.0));
    const double truth = detection_oracle(mu, 100.0);
    const auto direct = estimate_conditional_detection(rule, pair, mid, 1, 60000, opts(5));
    CHECK(within(direct.probability, truth, direct.std_error));
    const auto restart = estimate_conditional_detection(rule, pair, mid, 1, 60000, opts(6),
                                                        ConditioningMethod::memoryless_restart);
    CHECK(within(restart.probability, truth, restart.std_error));
    CHECK(within(direct.probability - restart.probability, 0.0,
                 std::hypot(direct.std_error, restart.std_error)));
  }
  CHECK(detection_oracle(1.0, 100.0) == doctest::Approx(0.09236224807369403).epsilon(1e-12));
  CHECK(detection_oracle(3.0, 100.0) == doctest::Approx(0.7497337474667971).epsilon(1e-12));
}

TEST_CASE("closed-form agreement over a grid") {
  const ChangeSchedule one({1}, 1, 1);
  for (double mu : {0.5, 1.0, 2.0}) {
    const auto pair = DistributionPair::gaussian_mean_shift(0.0, mu, 1.0);
    for (double eta : {5.0, 50.0, 500.0}) {
      const ShewhartRule rule(ShewhartDetector::calibrate(pair, eta));
      const auto c = estimate_conditional_detection(rule, pair, one, 1, 40000, opts(7),
                                                    ConditioningMethod::memoryless_restart);
      CHECK(within(c.probability, detection_oracle(mu, eta), c.std_error));
    }
  }
}

TEST_CASE("memoryless restart refuses rules with memory") {
  const ChangeSchedule mid({20}, 1, 40);
  CHECK_THROWS_AS(estimate_conditional_detection(FixedTimeRule(3), kUnit, mid, 1, 10, opts(1),
                                                 ConditioningMethod::memoryless_restart),
                  std::invalid_argument);
  CHECK_THROWS_AS(estimate_conditional_detection(FixedTimeRule(3), kUnit, mid, 2, 10, opts(1)),
                  std::invalid_argument);
}

TEST_CASE("degenerate onsets are reported") {
  const ChangeSchedule late({30}, 1, 40);
  const ShewhartRule always(ShewhartDetector::calibrate(kUnit, 1.0));
  const auto c = estimate_conditional_detection(always, kUnit, late, 1, 500, opts(8));
  CHECK(c.survivors == 0);
  CHECK(c.degenerate);
  const auto p = estimate_pollak(always, kUnit, late, 500, opts(8));
  CHECK(p.degenerate_count == 1);
  CHECK(p.value == 0.0);
}

TEST_CASE("Pollak sums") {
  const ShewhartRule rule(ShewhartDetector::calibrate(kUnit, 100.0));
  const double p = detection_oracle(1.0, 100.0);

  const ChangeSchedule one({20}, 1, 40);
  auto est = estimate_pollak(rule, kUnit, one, 60000, opts(9));
  CHECK(within(est.value, p, est.std_error));

  Rng rng(1);
  const auto three = make_schedule(30, 3, 1, Placement::even_grid, rng);
  est = estimate_pollak(rule, kUnit, three, 60000, opts(10));
  REQUIRE(est.per_onset.size() == 3);
  CHECK(within(est.value, 3.0 * p, est.std_error));
  CHECK(3.0 * p == doctest::Approx(0.2770867).epsilon(1e-6));

  const auto empty = make_schedule(30, 0, 1, Placement::even_grid, rng);
  est = estimate_pollak(rule, kUnit, empty, 100, opts(11));
  CHECK(est.value == 0.0);
  CHECK(est.std_error == 0.0);
}

TEST_CASE("property: conditional detection is schedule invariant for Shewhart") {
  const double eta = 10.0;
  const ShewhartRule rule(ShewhartDetector::calibrate(kUnit, eta));
  const double p = detection_oracle(1.0, eta);
  Rng rng(12);
  for (int trial = 0; trial < 6; ++trial) {
    const auto sched = make_schedule(30, 3, 1, Placement::uniform_random, rng);
    const auto est = estimate_pollak(rule, kUnit, sched, 20000, opts(100 + trial));
    for (const auto& c : est.per_onset) {
      if (!c.degenerate) CHECK(within(c.probability, p, c.std_error, 3.5));
    }
  }
}

TEST_CASE("ratio bound closed forms") {
  SUBCASE("always stop") {
    for (std::int64_t s : {1, 3, 10}) {
      const auto b = estimate_ratio_bound(AlwaysStopRule(), kUnit, s, 100000, 10, opts(13));
      CHECK(b.mean_tau == 1.0);
      CHECK(within(b.value, static_cast<double>(s), b.std_error));
    }
  }
  SUBCASE("fixed time") {
    for (std::int64_t k : {5, 50}) {
      const auto b = estimate_ratio_bound(FixedTimeRule(k), kUnit, 3, 100000, 100, opts(14));
      CHECK(b.mean_tau == static_cast<double>(k));
      CHECK(within(b.value, 3.0 / static_cast<double>(k), b.std_error));
    }
  }
  SUBCASE("Shewhart achieves the detection probability") {
    const ShewhartRule rule(ShewhartDetector::calibrate(kUnit, 100.0));
    const auto b = estimate_ratio_bound(rule, kUnit, 1, 200000, 10000, opts(15));
    CHECK(within(b.value, 0.09236224807369403, b.std_error));
    CHECK(b.censored == 0);
  }
  CHECK_THROWS_AS(estimate_ratio_bound(AlwaysStopRule(), kUnit, -1, 10, 10, opts(1)),
                  std::invalid_argument);
}

TEST_CASE("initial stop randomization keeps the ratio and reaches the target ARL") {
  const double eta = 20.0;
  const double looser = 25.0;
  const auto base = ShewhartDetector::calibrate(kUnit, looser);
  const double pi = initial_stop_prob_for_target(eta, looser);
  CHECK(pi == doctest::Approx(0.2));
  const auto randomized = base.with_initial_stop_prob(pi);

  const auto arl = estimate_arl(randomized, 200000, 1000, opts(16));
  CHECK(within(arl.mean, eta, arl.std_error));

  const auto plain = estimate_ratio_bound(ShewhartRule(base), kUnit, 1, 200000, 1000, opts(17));
  const auto lemma = estimate_ratio_bound(ShewhartRule(randomized), kUnit, 1, 200000, 1000, opts(18));
  CHECK(within(plain.value - lemma.value, 0.0, std::hypot(plain.std_error, lemma.std_error)));
  CHECK(within(lemma.value, detection_oracle(1.0, looser), lemma.std_error));
}

TEST_CASE("bound holds for a randomized rule") {
  Rng rng(1);
  const auto sched = make_schedule(20, 3, 1, Placement::even_grid, rng);
  const BernoulliStopRule rule(0.05);
  const auto pollak = estimate_pollak(rule, kUnit, sched, 50000, opts(19));
  const auto bound = estimate_ratio_bound(rule, kUnit, 3, 50000, 2000, opts(20));
  // Data-blind stopping: each term is q, the bound is s * q.
  CHECK(within(pollak.value, 0.15, pollak.std_error));
  CHECK(within(bound.value, 0.15, bound.std_error));
}

TEST_CASE("run_monitoring examples") {
  Rng data(21), decide(22);
  const auto d100 = ShewhartDetector::calibrate(kUnit, 100.0);
  const ChangeSchedule none({}, 1, 100000);
  auto o = run_monitoring(d100, none, MonitoringMode::single_shot, data, decide);
  REQUIRE(o.tau.has_value());
  REQUIRE(o.alarms.size() == 1);
  CHECK(o.alarms[0].kind == AlarmKind::false_alarm);
  CHECK(o.alarms[0].time == *o.tau);
  CHECK_FALSE(o.first_detection_time.has_value());

  const auto d1 = ShewhartDetector::calibrate(kUnit, 1.0);
  const ChangeSchedule five({5}, 1, 10);
  o = run_monitoring(d1, five, MonitoringMode::restart, data, decide);
  REQUIRE(o.alarms.size() == 5);
  for (int t = 1; t <= 4; ++t) CHECK(o.alarms[static_cast<std::size_t>(t - 1)] == Alarm{t, AlarmKind::false_alarm});
  CHECK(o.alarms[4] == Alarm{5, AlarmKind::true_onset});
  CHECK(o.first_detection_time == 5);
  CHECK(o.tau == 5);
  CHECK(o.missed_onsets_before_detection == 0);

  o = run_monitoring(d1, five, MonitoringMode::single_shot, data, decide);
  CHECK(o.tau == 1);
  CHECK_FALSE(o.first_detection_time.has_value());

  // Never alarms: horizon exhausted, every onset missed.
  const auto never = ShewhartDetector::with_threshold(kUnit, 1e300);
  const ChangeSchedule four({2, 4, 6, 8}, 1, 10);
  o = run_monitoring(never, four, MonitoringMode::restart, data, decide);
  CHECK_FALSE(o.tau.has_value());
  CHECK(o.missed_onsets_before_detection == 4);
}

TEST_CASE("run_monitoring consumes observations like generate_sequence") {
  Rng rng(1);
  const auto sched = make_schedule(500, 20, 3, Placement::uniform_random, rng);
  const auto d = ShewhartDetector::calibrate(kUnit, 50.0);
  Rng seq_rng(23);
  const auto xs = generate_sequence(kUnit, sched, seq_rng);
  Rng data(23), decide(24), replay(24);
  const auto o = run_monitoring(d, sched, MonitoringMode::restart, data, decide);
  std::vector<Alarm> expected;
  for (std::int64_t t = 1; t <= sched.horizon(); ++t) {
    if (!d.alarms(xs[static_cast<std::size_t>(t - 1)], replay)) continue;
    expected.push_back({t, sched.is_onset(t) ? AlarmKind::true_onset : AlarmKind::false_alarm});
    if (sched.is_onset(t)) break;
  }
  CHECK(o.alarms == expected);
}

TEST_CASE("restart monitoring matches the truncated geometric model") {
  const double eta = 100.0;
  const auto d = ShewhartDetector::calibrate(kUnit, eta);
  Rng rng(1);
  const auto sched = make_schedule(10000, 100, 1, Placement::even_grid, rng);
  const auto sum = summarize_monitoring(d, sched, MonitoringMode::restart, 20000, opts(25, 2));

  const double p = detection_oracle(1.0, eta);
  const int s = 100;
  const double any = 1.0 - std::pow(1.0 - p, s);
  double missed = 0.0;
  for (int k = 1; k <= s; ++k) missed += (k - 1) * p * std::pow(1.0 - p, k - 1);
  missed /= any;

  CHECK(within(sum.detect_first.value, p, sum.detect_first.std_error));
  // detect_any sits near 1, where the empirical se collapses; use the oracle's.
  CHECK(within(sum.detect_any.value, any, std::sqrt(any * (1.0 - any) / 20000.0) + 1e-12, 4.0));
  CHECK(within(sum.avg_missed.value, missed, sum.avg_missed.std_error));
  CHECK(sum.detect_any.value >= sum.detect_first.value);
}

TEST_CASE("single shot with no onsets never detects") {
  const auto d = ShewhartDetector::calibrate(kUnit, 10.0);
  const ChangeSchedule none({}, 1, 1000);
  const auto sum = summarize_monitoring(d, none, MonitoringMode::single_shot, 2000, opts(26));
  CHECK(sum.detect_any.value == 0.0);
  CHECK(sum.detect_first.value == 0.0);
  CHECK(std::isnan(sum.avg_missed.value));
}

TEST_CASE("stratified history test") {
  Rng rng(1);
  const ChangeSchedule sched({20}, 1, 40);
  const ShewhartRule shewhart(ShewhartDetector::calibrate(kUnit, 10.0));
  const auto flat = stratified_detection_test(shewhart, kUnit, sched, 1, 100000, 5, opts(27));
  CHECK(flat.dof == 4);
  CHECK(flat.p_value > 0.01);

  const PairSumRule lookback(2.5);
  const auto skewed = stratified_detection_test(lookback, kUnit, sched, 1, 100000, 5, opts(28));
  CHECK(skewed.p_value < 0.01);
  // Higher previous samples make detection more likely.
  const auto rate = [&](std::size_t b) {
    return static_cast<double>(skewed.hits[b]) / static_cast<double>(skewed.survivors[b]);
  };
  CHECK(rate(4) > rate(0));
}

TEST_CASE("Lorden estimate") {
  const ChangeSchedule sched({10, 20, 30}, 1, 40);
  const ShewhartRule shewhart(ShewhartDetector::calibrate(kUnit, 10.0));
  const auto lorden = estimate_lorden(shewhart, kUnit, sched, 20000, 5, opts(29));
  const auto pollak = estimate_pollak(shewhart, kUnit, sched, 20000, opts(29));
  CHECK(lorden.value == pollak.value);
  CHECK(lorden.std_error == pollak.std_error);

  const PairSumRule lookback(2.5);
  const auto worst = estimate_lorden(lookback, kUnit, sched, 50000, 5, opts(30));
  const auto avg = estimate_pollak(lookback, kUnit, sched, 50000, opts(30));
  CHECK(worst.value <= avg.value);
}

TEST_CASE("results do not depend on the worker count") {
  Rng rng(1);
  const auto sched = make_schedule(2000, 20, 1, Placement::even_grid, rng);
  const auto d = ShewhartDetector::calibrate(kUnit, 20.0);
  const auto a = summarize_monitoring(d, sched, MonitoringMode::restart, 3000, opts(31, 1));
  const auto b = summarize_monitoring(d, sched, MonitoringMode::restart, 3000, opts(31, 7));
  CHECK(a.detect_first.value == b.detect_first.value);
  CHECK(a.detect_any.value == b.detect_any.value);
  CHECK(a.avg_missed.value == b.avg_missed.value);

  const ShewhartRule rule(d);
  const auto p1 = estimate_pollak(rule, kUnit, ChangeSchedule({5, 10}, 1, 20), 5000, opts(32, 1));
  const auto p2 = estimate_pollak(rule, kUnit, ChangeSchedule({5, 10}, 1, 20), 5000, opts(32, 3));
  CHECK(p1.value == p2.value);
  const auto n1 = simulate_null_runs(rule, kUnit, 5000, 1000, opts(33, 1));
  const auto n2 = simulate_null_runs(rule, kUnit, 5000, 1000, opts(33, 4));
  for (std::size_t i = 0; i < n1.size(); ++i) CHECK(n1[i].tau == n2[i].tau);
}

TEST_CASE("curves and criteria report") {
  Rng rng(1);
  const auto sched = make_schedule(10000, 100, 1, Placement::even_grid, rng);
  const std::vector<double> etas{5.0, 20.0, 100.0};
  const auto rows = detect_first_any_curves(kUnit, sched, etas, 2000, MonitoringMode::restart, opts(34));
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) CHECK(r.summary.detect_any.value >= r.summary.detect_first.value);
  CHECK(rows.front().summary.detect_first.value > rows.back().summary.detect_first.value);
  CHECK_THROWS_AS(detect_first_any_curves(kUnit, sched, {}, 10, MonitoringMode::restart, opts(1)),
                  std::invalid_argument);

  CriteriaSettings settings;
  settings.n_trials = 4000;
  const auto report = evaluate_criteria(ShewhartDetector::calibrate(kUnit, 20.0), sched, settings, opts(35));
  for (const auto& e : {report.pollak, report.detect_first, report.detect_any}) {
    CHECK(e.std_error >= 0.0);
  }
  CHECK(report.detect_first.value <= 1.0);
  CHECK(report.lorden.value == report.pollak.value);
  CHECK(within(report.arl_to_false_alarm.value, 20.0, report.arl_to_false_alarm.std_error, 4.0));
  const double combined = std::hypot(report.pollak.std_error, report.ratio_bound.std_error);
  CHECK(within(report.pollak.value - report.ratio_bound.value, 0.0, combined, 4.0));
  settings.arl_horizon_factor = 5.0;
  CHECK_THROWS_AS(evaluate_criteria(ShewhartDetector::calibrate(kUnit, 20.0), sched, settings, opts(1)),
                  ConfigError);
}

TEST_CASE("monitoring mode names") {
  CHECK(to_string(MonitoringMode::restart) == "restart");
  CHECK(monitoring_mode_from_string("single_shot") == MonitoringMode::single_shot);
  CHECK_THROWS_AS(monitoring_mode_from_string("loop"), std::invalid_argument);
}
