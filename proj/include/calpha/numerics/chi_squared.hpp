#pragma once

#include <stdexcept>

#include "calpha/numerics/special_functions.hpp"

namespace calpha::numerics {

/// Central chi-squared CDF with df >= 0 degrees of freedom. df = 0 is the
/// degenerate distribution with mass 1 at 0, so its CDF is 1 on [0, inf).
inline double chisq_cdf(double x, int df) {
  if (df < 0) {
    throw std::domain_error("chisq_cdf: df must be nonnegative");
  }
  if (x < 0.0) {
    throw std::domain_error("chisq_cdf: x must be nonnegative");
  }
  if (df == 0) {
    return 1.0;
  }
  return gamma_p(0.5 * df, 0.5 * x);
}

/// Chi-squared quantile by bracketed bisection on the CDF, resolved to 1e-12.
inline double chisq_quantile(double p, int df) {
  if (df <= 0) {
    throw std::domain_error("chisq_quantile: df must be positive");
  }
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::domain_error("chisq_quantile: p must lie in (0, 1)");
  }
  double lo = 0.0;
  double hi = df + 10.0 * std::sqrt(2.0 * df) + 10.0;
  while (chisq_cdf(hi, df) < p) {
    hi *= 2.0;
    if (hi > 1e12) {
      break;
    }
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chisq_cdf(mid, df) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-12 * (1.0 + hi)) {
      break;
    }
  }
  return hi;
}

} // namespace calpha::numerics
