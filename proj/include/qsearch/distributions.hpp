#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "qsearch/rng.hpp"

namespace qsearch {

enum class Family { gaussian_mean_shift };

enum class Hypothesis { nominal, alternative };

std::string_view to_string(Family family) noexcept;

/// f1(x) / f0(x) for one observation. Stored in log space; value() may be +inf
/// for extreme samples but the log is always finite for the Gaussian family.
class LikelihoodRatio {
 public:
  static LikelihoodRatio from_log(double log_value) noexcept { return LikelihoodRatio(log_value); }

  double value() const noexcept;
  double log_value() const noexcept { return log_value_; }

 private:
  explicit LikelihoodRatio(double log_value) noexcept : log_value_(log_value) {}
  double log_value_;
};

/// Threshold together with the tail probability it actually achieves.
struct Calibration {
  double alpha;
  double achieved_tail;
};

/**
 * The known nominal / transient pair (F0, F1).
 *
 * Only the Gaussian mean shift has a closed-form likelihood-ratio tail; any
 * family added later without one is calibrated through the Monte Carlo
 * quantile path (lr_quantile_f0_monte_carlo).
 */
class DistributionPair {
 public:
  /// Throws std::invalid_argument unless sigma > 0, both means finite, mean0 != mean1.
  static DistributionPair gaussian_mean_shift(double mean0, double mean1, double sigma);

  Family kind() const noexcept { return kind_; }
  double mean0() const noexcept { return mean0_; }
  double mean1() const noexcept { return mean1_; }
  double sigma() const noexcept { return sigma_; }

  bool has_closed_form_tail() const noexcept { return kind_ == Family::gaussian_mean_shift; }

  double log_likelihood_ratio(double x) const noexcept {
    // ((mu1 - mu0) x - (mu1^2 - mu0^2) / 2) / sigma^2, factored to avoid cancellation.
    return (mean1_ - mean0_) * (x - 0.5 * (mean0_ + mean1_)) * inv_var_;
  }

  friend bool operator==(const DistributionPair&, const DistributionPair&) = default;

 private:
  DistributionPair(Family kind, double mean0, double mean1, double sigma) noexcept
      : kind_(kind), mean0_(mean0), mean1_(mean1), sigma_(sigma), inv_var_(1.0 / (sigma * sigma)) {}

  Family kind_;
  double mean0_;
  double mean1_;
  double sigma_;
  double inv_var_;
};

double density(const DistributionPair& pair, Hypothesis which, double x) noexcept;

LikelihoodRatio likelihood_ratio(const DistributionPair& pair, double x) noexcept;

/// One draw from F0 or F1.
double sample(const DistributionPair& pair, Hypothesis which, Rng& rng);

/// P(l(X) >= alpha) for X ~ F0. alpha = 0 gives 1; negative or NaN alpha throws.
double lr_tail_prob_f0(const DistributionPair& pair, double alpha);

/// P(l(X) >= alpha) for X ~ F1, the detection probability of a single onset sample.
double lr_tail_prob_f1(const DistributionPair& pair, double alpha);

/// Smallest alpha with lr_tail_prob_f0(alpha) <= p, p in (0, 1).
double lr_quantile_f0(const DistributionPair& pair, double p);

/**
 * Empirical version of lr_quantile_f0 from n_samples draws of l(X), X ~ F0.
 *
 * Returns the conservative threshold (empirical tail <= p) and the empirical
 * tail it attains, which may sit below p when l(X) has atoms or n*p is not an
 * integer.
 */
Calibration lr_quantile_f0_monte_carlo(const DistributionPair& pair, double p,
                                       std::size_t n_samples, Rng& rng);

}  // namespace qsearch
