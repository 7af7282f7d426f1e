#include "qsearch/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsearch/normal.hpp"

namespace qsearch {

std::string_view to_string(Family family) noexcept {
  switch (family) {
    case Family::gaussian_mean_shift:
      return "gaussian_mean_shift";
  }
  return "unknown";
}

double LikelihoodRatio::value() const noexcept { return std::exp(log_value_); }

DistributionPair DistributionPair::gaussian_mean_shift(double mean0, double mean1, double sigma) {
  if (!std::isfinite(mean0) || !std::isfinite(mean1)) {
    throw std::invalid_argument("gaussian_mean_shift: means must be finite");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("gaussian_mean_shift: sigma must be positive and finite");
  }
  if (mean0 == mean1) {
    throw std::invalid_argument("gaussian_mean_shift: mean0 and mean1 must differ");
  }
  return DistributionPair(Family::gaussian_mean_shift, mean0, mean1, sigma);
}

double density(const DistributionPair& pair, Hypothesis which, double x) noexcept {
  const double mean = which == Hypothesis::nominal ? pair.mean0() : pair.mean1();
  const double z = (x - mean) / pair.sigma();
  return standard_normal_pdf(z) / pair.sigma();
}

LikelihoodRatio likelihood_ratio(const DistributionPair& pair, double x) noexcept {
  return LikelihoodRatio::from_log(pair.log_likelihood_ratio(x));
}

double sample(const DistributionPair& pair, Hypothesis which, Rng& rng) {
  const double mean = which == Hypothesis::nominal ? pair.mean0() : pair.mean1();
  return mean + pair.sigma() * rng.standard_normal();
}

namespace {

void check_alpha(double alpha) {
  if (std::isnan(alpha) || alpha < 0.0) {
    throw std::invalid_argument("likelihood-ratio threshold must be nonnegative");
  }
}

// l(x) >= alpha  <=>  x on the far side of this point (mean-shift family).
double crossing_point(const DistributionPair& pair, double log_alpha) {
  const double delta = pair.mean1() - pair.mean0();
  return pair.sigma() * pair.sigma() * log_alpha / delta + 0.5 * (pair.mean0() + pair.mean1());
}

double lr_tail_prob(const DistributionPair& pair, double alpha, double mean) {
  check_alpha(alpha);
  if (alpha == 0.0) return 1.0;
  if (std::isinf(alpha)) return 0.0;
  const double z = (crossing_point(pair, std::log(alpha)) - mean) / pair.sigma();
  return pair.mean1() > pair.mean0() ? standard_normal_upper_tail(z) : standard_normal_cdf(z);
}

}  // namespace

double lr_tail_prob_f0(const DistributionPair& pair, double alpha) {
  return lr_tail_prob(pair, alpha, pair.mean0());
}

double lr_tail_prob_f1(const DistributionPair& pair, double alpha) {
  return lr_tail_prob(pair, alpha, pair.mean1());
}

double lr_quantile_f0(const DistributionPair& pair, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("lr_quantile_f0: p must lie in (0, 1), got " + std::to_string(p));
  }
  const double delta = pair.mean1() - pair.mean0();
  const double z_p = standard_normal_upper_quantile(p);
  // Crossing point x* with P0(X beyond x*) = p, on the side where l grows.
  const double x_star = delta > 0.0 ? pair.mean0() + pair.sigma() * z_p
                                    : pair.mean0() - pair.sigma() * z_p;
  return std::exp(pair.log_likelihood_ratio(x_star));
}

Calibration lr_quantile_f0_monte_carlo(const DistributionPair& pair, double p,
                                       std::size_t n_samples, Rng& rng) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("lr_quantile_f0_monte_carlo: p must lie in (0, 1)");
  }
  if (n_samples == 0) {
    throw std::invalid_argument("lr_quantile_f0_monte_carlo: need at least one sample");
  }
  std::vector<double> log_lr(n_samples);
  for (auto& v : log_lr) v = pair.log_likelihood_ratio(sample(pair, Hypothesis::nominal, rng));
  std::sort(log_lr.begin(), log_lr.end(), std::greater<>());

  const auto n = static_cast<double>(n_samples);
  const auto allowed = static_cast<std::size_t>(std::floor(p * n));
  if (allowed == 0) {
    // Nothing may exceed the threshold: step just past the largest draw.
    const double above = std::nextafter(log_lr.front(), std::numeric_limits<double>::infinity());
    return {std::exp(above), 0.0};
  }
  // allowed-th largest value; ties at it count toward the tail and may push it
  // over p, in which case step up to the next distinct value.
  std::size_t k = allowed - 1;
  double threshold = log_lr[k];
  auto count_at_least = [&](double t) {
    return static_cast<std::size_t>(
        std::upper_bound(log_lr.begin(), log_lr.end(), t, std::greater<>()) - log_lr.begin());
  };
  while (count_at_least(threshold) > allowed) {
    if (k == 0) {
      threshold = std::nextafter(log_lr.front(), std::numeric_limits<double>::infinity());
      break;
    }
    --k;
    threshold = log_lr[k];
  }
  return {std::exp(threshold), static_cast<double>(count_at_least(threshold)) / n};
}

}  // namespace qsearch
