#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "calpha/errors.hpp"
#include "calpha/numerics/chi_bar_mixture.hpp"
#include "calpha/numerics/linalg.hpp"

namespace calpha::core {

struct ConeProjection {
  double statistic;    // squared norm of the projection of w onto the cone
  int projection_case; // 1 interior, 2 first edge ray, 3 second edge ray, 4 origin
};

/// Squared norm of the Euclidean projection of w onto the cone
///   { (e1, e2) : e2 >= 0, e1 * sqrt(1-rho^2) - rho * e2 >= 0 },
/// which is spanned by the unit rays u = (1, 0) and v = (rho, sqrt(1-rho^2)).
/// The projection of a point outside a 2-D convex cone lands on one of the
/// two edge rays or at the origin, so the exact minimizer is found by
/// comparing those candidates. This reproduces the four printed cases for
/// rho > 0 and extends continuously through rho = 0 and rho < 0.
inline ConeProjection bivariate_T(const Eigen::Vector2d& w, double rho) {
  if (!(std::abs(rho) < 1.0)) {
    throw SingularityError("bivariate_T: |rho| must be < 1");
  }
  const double s = std::sqrt(1.0 - rho * rho);
  // Membership: both cone inequalities, written division-free.
  if (w(1) >= 0.0 && w(0) * s - rho * w(1) >= 0.0) {
    return {w.squaredNorm(), 1};
  }
  const double cu = w(0);             // w . u
  const double cv = rho * w(0) + s * w(1); // w . v
  const double norm2 = w.squaredNorm();
  // Distances^2 to the candidate projections; the origin candidate is norm2.
  double best = norm2;
  double proj2 = 0.0;
  int which = 4;
  if (cu > 0.0 && norm2 - cu * cu < best) {
    best = norm2 - cu * cu;
    proj2 = cu * cu;
    which = 2;
  }
  if (cv > 0.0 && norm2 - cv * cv < best) {
    best = norm2 - cv * cv;
    proj2 = cv * cv;
    which = 3;
  }
  return {proj2, which};
}

/// Null mixture of the bivariate cone statistic:
/// (1/2 - beta/2pi) chi2_0 + 1/2 chi2_1 + (beta/2pi) chi2_2, beta = acos(rho).
inline numerics::ChiBarMixture bivariate_weights(double rho) {
  if (!(std::abs(rho) < 1.0)) {
    throw SingularityError("bivariate_weights: |rho| must be < 1");
  }
  const double beta = std::acos(rho);
  const double w2 = beta / (4.0 * M_PI_2);
  return numerics::ChiBarMixture{{0.5 - w2, 0}, {0.5, 1}, {w2, 2}};
}

/// Diagonal q-dimensional statistic T = (0 v S)' Sigma^{-1} (0 v S).
inline double diag_T(const numerics::Vector& resid, const numerics::Vector& sigma_diag) {
  if (resid.size() != sigma_diag.size()) {
    throw std::domain_error("diag_T: dimension mismatch");
  }
  double t = 0.0;
  for (Eigen::Index k = 0; k < resid.size(); ++k) {
    if (!(sigma_diag(k) > 0.0)) {
      throw SingularityError("diag_T: Sigma diagonal must be positive");
    }
    const double pos = std::max(0.0, resid(k));
    t += pos * pos / sigma_diag(k);
  }
  return t;
}

/// Null mixture for the diagonal statistic: sum_i C(q,i) 2^{-q} chi2_i.
inline numerics::ChiBarMixture diag_weights(int q) {
  if (q < 1 || q > 40) {
    throw std::domain_error("diag_weights: q out of range");
  }
  std::vector<numerics::ChiBarMixture::Component> comps;
  comps.reserve(q + 1);
  const double scale = std::ldexp(1.0, -q);
  double binom = 1.0;
  for (int i = 0; i <= q; ++i) {
    comps.push_back({binom * scale, i});
    binom = binom * (q - i) / (i + 1);
  }
  return numerics::ChiBarMixture(std::move(comps));
}

} // namespace calpha::core
