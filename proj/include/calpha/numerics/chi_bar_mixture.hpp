#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "calpha/numerics/chi_squared.hpp"

namespace calpha::numerics {

/// Weighted mixture of central chi-squared distributions. A component with
/// df = 0 is the point mass at 0. Weights must sum to 1 (within 1e-12) and
/// df values must be strictly increasing.
class ChiBarMixture {
 public:
  struct Component {
    double weight;
    int df;
  };

  ChiBarMixture(std::initializer_list<Component> comps)
      : ChiBarMixture(std::vector<Component>(comps)) {}

  explicit ChiBarMixture(std::vector<Component> comps) : components_(std::move(comps)) {
    if (components_.empty()) {
      throw std::domain_error("ChiBarMixture: no components");
    }
    double sum = 0.0;
    int prev_df = -1;
    for (const auto& c : components_) {
      if (c.weight < 0.0 || c.weight > 1.0) {
        throw std::domain_error("ChiBarMixture: weight outside [0, 1]");
      }
      if (c.df <= prev_df) {
        throw std::domain_error("ChiBarMixture: df values must be strictly increasing");
      }
      prev_df = c.df;
      sum += c.weight;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw std::domain_error("ChiBarMixture: weights must sum to 1");
    }
  }

  const std::vector<Component>& components() const { return components_; }

  /// Probability mass the mixture places at exactly 0.
  double mass_at_zero() const {
    double m = 0.0;
    for (const auto& c : components_) {
      if (c.df == 0) {
        m += c.weight;
      }
    }
    return m;
  }

  double cdf(double x) const {
    if (x < 0.0) {
      throw std::domain_error("ChiBarMixture::cdf: x must be nonnegative");
    }
    double f = 0.0;
    for (const auto& c : components_) {
      f += c.weight * chisq_cdf(x, c.df);
    }
    return f;
  }

  /// Smallest x with cdf(x) >= p. Below the mass at zero the quantile is 0.
  double quantile(double p) const {
    if (!(p > 0.0) || !(p < 1.0)) {
      throw std::domain_error("ChiBarMixture::quantile: p must lie in (0, 1)");
    }
    if (p <= mass_at_zero()) {
      return 0.0;
    }
    double lo = 0.0;
    double hi = 1.0;
    while (cdf(hi) < p) {
      hi *= 2.0;
      if (hi > 1e12) {
        break;
      }
    }
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (cdf(mid) < p) {
        lo = mid;
      } else {
        hi = mid;
      }
      if (hi - lo < 1e-12 * (1.0 + hi)) {
        break;
      }
    }
    // hi keeps cdf(hi) >= p through the bisection
    return hi;
  }

  /// Upper tail probability, with the atom at zero handled so that a
  /// statistic equal to 0 gets p-value 1.
  double p_value(double statistic) const {
    if (statistic <= 0.0) {
      return 1.0;
    }
    return 1.0 - cdf(statistic);
  }

 private:
  std::vector<Component> components_;
};

inline ChiBarMixture half_half_mixture() {
  return ChiBarMixture{{0.5, 0}, {0.5, 1}};
}

} // namespace calpha::numerics
