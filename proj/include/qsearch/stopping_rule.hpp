#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "qsearch/detector.hpp"
#include "qsearch/rng.hpp"

namespace qsearch {

/**
 * Plug-in stopping rule for the Monte Carlo estimators.
 *
 * A rule is reset at the start of each run, may stop at t = 0 with
 * initial_stop_prob(), and then sees X_1, X_2, ... one at a time. Rules whose
 * decision at t depends on X_t alone report memoryless() so estimators can
 * evaluate onsets without replaying the history.
 */
class StoppingRule {
 public:
  virtual ~StoppingRule() = default;

  virtual std::unique_ptr<StoppingRule> clone() const = 0;
  virtual std::string name() const = 0;

  virtual void reset() {}
  virtual double initial_stop_prob() const { return 0.0; }
  virtual bool memoryless() const { return false; }

  /// true = stop at t.
  virtual bool observe(std::int64_t t, double x, Rng& rng) = 0;
};

class ShewhartRule final : public StoppingRule {
 public:
  explicit ShewhartRule(ShewhartDetector detector) : detector_(std::move(detector)) {}

  std::unique_ptr<StoppingRule> clone() const override { return std::make_unique<ShewhartRule>(*this); }
  std::string name() const override;
  double initial_stop_prob() const override { return detector_.initial_stop_prob(); }
  bool memoryless() const override { return true; }
  bool observe(std::int64_t, double x, Rng& rng) override { return detector_.alarms(x, rng); }

  const ShewhartDetector& detector() const noexcept { return detector_; }

 private:
  ShewhartDetector detector_;
};

/// tau = 1.
class AlwaysStopRule final : public StoppingRule {
 public:
  std::unique_ptr<StoppingRule> clone() const override { return std::make_unique<AlwaysStopRule>(*this); }
  std::string name() const override { return "always-stop"; }
  bool memoryless() const override { return true; }
  bool observe(std::int64_t, double, Rng&) override { return true; }
};

/// tau = k, ignoring the data.
class FixedTimeRule final : public StoppingRule {
 public:
  explicit FixedTimeRule(std::int64_t k);

  std::unique_ptr<StoppingRule> clone() const override { return std::make_unique<FixedTimeRule>(*this); }
  std::string name() const override { return "stop-at-" + std::to_string(k_); }
  bool observe(std::int64_t t, double, Rng&) override { return t >= k_; }

 private:
  std::int64_t k_;
};

/// Stops at each step with probability q, independent of the data.
class BernoulliStopRule final : public StoppingRule {
 public:
  explicit BernoulliStopRule(double q);

  std::unique_ptr<StoppingRule> clone() const override { return std::make_unique<BernoulliStopRule>(*this); }
  std::string name() const override;
  bool memoryless() const override { return true; }
  bool observe(std::int64_t, double, Rng& rng) override { return rng.bernoulli(q_); }

 private:
  double q_;
};

}  // namespace qsearch
