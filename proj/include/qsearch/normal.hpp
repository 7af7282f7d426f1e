#pragma once

namespace qsearch {

/// Standard normal density.
double standard_normal_pdf(double z) noexcept;

/// Phi(z), computed from erfc so the lower tail keeps full relative precision.
double standard_normal_cdf(double z) noexcept;

/// Q(z) = 1 - Phi(z) without cancellation for large z.
double standard_normal_upper_tail(double z) noexcept;

/**
 * Phi^-1(p) via Wichura's AS 241 (PPND16).
 *
 * Relative accuracy is about 1e-16 over (1e-300, 1 - 1e-16). Returns -inf/+inf
 * at p = 0 / p = 1 and NaN outside [0, 1].
 */
double standard_normal_quantile(double p) noexcept;

/// z with Q(z) = p; evaluated on the small tail directly, so tiny p stays exact.
double standard_normal_upper_quantile(double p) noexcept;

}  // namespace qsearch
