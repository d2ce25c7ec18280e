#pragma once

#include <algorithm>
#include <cmath>

namespace recip {

// log(exp(a) + exp(b)) with max subtraction.
inline double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  if (!std::isfinite(m)) return m;  // both -inf (or a nan propagates)
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// log(1 + exp(f1) + exp(f2) + exp(f3)): the dyad normalizer on the log scale.
inline double log_normalizer(double f1, double f2, double f3) {
  const double m = std::max({0.0, f1, f2, f3});
  return m + std::log(std::exp(-m) + std::exp(f1 - m) + std::exp(f2 - m) +
                      std::exp(f3 - m));
}

// Inverse of the standard normal CDF (Wichura's PPND16, ~1e-15 accurate).
double normal_quantile(double p);

// Two-sided critical value for a confidence level, e.g. 0.95 -> 1.959964.
inline double normal_critical_value(double level) {
  return normal_quantile(0.5 + 0.5 * level);
}

double normal_cdf(double x);

}  // namespace recip
