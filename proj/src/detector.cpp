#include "qsearch/detector.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qsearch {

namespace {

void check_eta(double eta) {
  if (!(eta >= 1.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("eta must be finite and at least 1");
  }
}

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
}

}  // namespace

ShewhartDetector::ShewhartDetector(const DistributionPair& pair, double alpha, double eta,
                                   double achieved_tail)
    : pair_(pair),
      alpha_(alpha),
      log_alpha_(alpha > 0.0 ? std::log(alpha) : -std::numeric_limits<double>::infinity()),
      eta_(eta),
      achieved_tail_(achieved_tail) {}

ShewhartDetector ShewhartDetector::calibrate(const DistributionPair& pair, double eta) {
  check_eta(eta);
  if (eta == 1.0) return ShewhartDetector(pair, 0.0, 1.0, 1.0);
  const double alpha = lr_quantile_f0(pair, 1.0 / eta);
  return ShewhartDetector(pair, alpha, eta, lr_tail_prob_f0(pair, alpha));
}

ShewhartDetector ShewhartDetector::calibrate_monte_carlo(const DistributionPair& pair, double eta,
                                                         std::size_t n_samples, Rng& rng) {
  check_eta(eta);
  if (eta == 1.0) return ShewhartDetector(pair, 0.0, 1.0, 1.0);
  const Calibration c = lr_quantile_f0_monte_carlo(pair, 1.0 / eta, n_samples, rng);
  return ShewhartDetector(pair, c.alpha, eta, c.achieved_tail);
}

ShewhartDetector ShewhartDetector::with_threshold(const DistributionPair& pair, double alpha) {
  if (std::isnan(alpha) || alpha < 0.0) {
    throw std::invalid_argument("threshold alpha must be nonnegative");
  }
  const double tail = lr_tail_prob_f0(pair, alpha);
  const double eta = tail > 0.0 ? 1.0 / tail : std::numeric_limits<double>::infinity();
  return ShewhartDetector(pair, alpha, eta, tail);
}

ShewhartDetector ShewhartDetector::with_initial_stop_prob(double p) const {
  check_probability(p, "initial stop probability");
  ShewhartDetector copy = *this;
  copy.initial_stop_prob_ = p;
  return copy;
}

ShewhartDetector ShewhartDetector::with_boundary_randomization(double q) const {
  check_probability(q, "boundary alarm probability");
  ShewhartDetector copy = *this;
  copy.boundary_alarm_prob_ = q;
  return copy;
}

StepDecision ShewhartDetector::step(double x, Rng& rng) const {
  const bool alarm = alarms(x, rng);
  return {alarm ? Verdict::alarm : Verdict::continue_sampling, likelihood_ratio(pair_, x).value()};
}

double initial_stop_prob_for_target(double eta, double arl_given_positive) {
  check_eta(eta);
  if (!(arl_given_positive >= eta)) {
    throw std::invalid_argument("rule is infeasible: E{nu | nu > 0} is below eta");
  }
  return 1.0 - eta / arl_given_positive;
}

}  // namespace qsearch
