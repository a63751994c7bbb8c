#pragma once

#include <cmath>

#include "calpha/numerics/chi_squared.hpp"
#include "calpha/numerics/linalg.hpp"

namespace calpha::core {

struct RegularCalphaResult {
  double statistic;
  double p_value; // upper chi2_q tail
};

/// Regular (non-degenerate) C(alpha) test: T = g' I_{xi.theta}^{-1} g with
/// g = C_xi,n - I_xt I_tt^{-1} C_theta,n, asymptotically chi2_q under H0.
/// Score matrices hold per-observation first-order scores; C's are the
/// 1/sqrt(n)-normed column sums.
inline RegularCalphaResult regular_calpha(const numerics::Matrix& xi_scores,
                                          const numerics::Matrix& theta_scores,
                                          const numerics::Matrix& I_xx,
                                          const numerics::Matrix& I_xt,
                                          const numerics::Matrix& I_tt) {
  const double n = static_cast<double>(xi_scores.rows());
  const numerics::Vector c_xi = xi_scores.colwise().sum() / std::sqrt(n);
  const numerics::Vector c_theta = theta_scores.colwise().sum() / std::sqrt(n);
  const numerics::Matrix coef = numerics::spd_solve(I_tt, I_xt.transpose(), "I_tt").transpose();
  const numerics::Vector g = c_xi - coef * c_theta;
  numerics::Matrix resid_info = I_xx - coef * I_xt.transpose();
  resid_info = 0.5 * (resid_info + resid_info.transpose());
  const numerics::Vector solved = numerics::spd_solve(resid_info, g, "I_xi.theta");
  RegularCalphaResult out;
  out.statistic = g.dot(solved);
  out.p_value = 1.0 - numerics::chisq_cdf(out.statistic, static_cast<int>(xi_scores.cols()));
  return out;
}

} // namespace calpha::core
