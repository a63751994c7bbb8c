#pragma once

#include <cmath>

#include "calpha/core/score_decomposition.hpp"
#include "calpha/core/test_report.hpp"
#include "calpha/models/data.hpp"
#include "calpha/numerics/special_functions.hpp"

// Frailty tests for the proportional hazard model with exponential or
// Weibull baseline. Writing w_i = Lambda_0(t_i) e^{x_i'beta}, the second
// order frailty score is (1 - w)^2 - w per observation, and under the null
// w ~ Exp(1), so E w^k = k!.

namespace calpha::models {

/// q = 1 + trigamma(2) - digamma(2)^2, the constant in the Weibull test's
/// variance normalization.
inline double weibull_q() {
  static const double q = 1.0 + numerics::trigamma(2.0) -
                          numerics::digamma(2.0) * numerics::digamma(2.0);
  return q;
}

namespace weibull_fisher {

// Closed-form nuisance information for the Weibull PH model, with
// d_i = psi(2) - x_i'beta:
//   I_bb = sum x x',  I_ba = sum (d_i / alpha) x_i,
//   I_aa = sum (q + d_i^2) / alpha^2,
// the form whose Schur complement is nq/alpha^2 whenever the design holds
// an intercept, giving the n(4 - 4/q) residual variance.
inline Matrix theta_information(const Matrix& X, const Vector& beta, double alpha) {
  const Eigen::Index p = X.cols();
  const double psi2 = numerics::digamma(2.0);
  const Vector d = psi2 - (X * beta).array();
  Matrix info(p + 1, p + 1);
  info.topLeftCorner(p, p) = X.transpose() * X;
  info.block(0, p, p, 1) = (X.transpose() * d) / alpha;
  info.block(p, 0, 1, p) = info.block(0, p, p, 1).transpose();
  info(p, p) = (weibull_q() * static_cast<double>(X.rows()) + d.squaredNorm()) / (alpha * alpha);
  return info;
}

/// Closed-form block inverse of theta_information via the Schur
/// complement of the (beta, beta) block.
inline Matrix theta_information_inverse(const Matrix& X, const Vector& beta,
                                                double alpha) {
  const Eigen::Index p = X.cols();
  const double n = static_cast<double>(X.rows());
  const double psi2 = numerics::digamma(2.0);
  const Vector d = psi2 - (X * beta).array();
  const Matrix S1 = X.transpose() * X;
  const Vector m = (X.transpose() * d) / alpha;
  const Matrix S1_inv = numerics::spd_inverse(S1, "X'X");
  const double schur =
      (weibull_q() * n + d.squaredNorm()) / (alpha * alpha) - m.dot(S1_inv * m);
  if (!(schur > 0.0)) {
    throw SingularityError("weibull_fisher: nuisance information is not positive definite");
  }
  Matrix inv(p + 1, p + 1);
  const Vector s1m = S1_inv * m;
  inv.topLeftCorner(p, p) = S1_inv + s1m * s1m.transpose() / schur;
  inv.block(0, p, p, 1) = -s1m / schur;
  inv.block(p, 0, 1, p) = inv.block(0, p, p, 1).transpose();
  inv(p, p) = 1.0 / schur;
  return inv;
}

/// I_xi,theta row: per observation (-x_i', -(2 + d_i)/alpha), summed.
inline Vector xi_theta_information(const Matrix& X, const Vector& beta, double alpha) {
  const Eigen::Index p = X.cols();
  const double psi2 = numerics::digamma(2.0);
  const Vector d = psi2 - (X * beta).array();
  Vector row(p + 1);
  row.head(p) = -X.colwise().sum().transpose();
  row(p) = -(2.0 * static_cast<double>(X.rows()) + d.sum()) / alpha;
  return row;
}

/// Residual variance of the summed second-order score under MLE plug-in:
/// sum_i Var(d^2_xi log f) - I_xt I_tt^{-1} I_tx with Var per observation 5.
inline double residual_variance(const Matrix& X, const Vector& beta, double alpha) {
  const Vector row = xi_theta_information(X, beta, alpha);
  const Matrix inv = theta_information_inverse(X, beta, alpha);
  return 5.0 * static_cast<double>(X.rows()) - row.dot(inv * row);
}

} // namespace weibull_fisher

namespace detail {

inline Vector hazard_w(const DurationData& d, const Vector& beta_hat, double alpha_hat) {
  return (alpha_hat * d.t.array().log() + (d.X * beta_hat).array()).exp();
}

inline void require_ph_score_zero(const DurationData& d, const Vector& w) {
  const Vector grad = d.X.transpose() * (Vector::Ones(d.t.size()) - w);
  if (grad.norm() > 1e-6 * std::sqrt(static_cast<double>(d.n())) * 10.0) {
    throw ConvergenceError("frailty test: beta_hat does not solve the PH score equations");
  }
}

inline void attach_beta(core::TestReport& report, const Vector& beta_hat) {
  for (Eigen::Index j = 0; j < beta_hat.size(); ++j) {
    report.nuisance_estimates.emplace_back("beta" + std::to_string(j), beta_hat(j));
  }
}

} // namespace detail

/// Score decomposition for the exponential-baseline frailty test.
inline core::ScoreDecomposition cox_exp_frailty_scores(const DurationData& d,
                                                       const Vector& beta_hat) {
  const Vector w = detail::hazard_w(d, beta_hat, 1.0);
  const double n = static_cast<double>(d.n());
  core::ScoreDecomposition sd;
  sd.xi_scores.resize(d.t.size(), 1);
  sd.xi_scores.col(0) = 0.5 * ((1.0 - w.array()).square() - w.array());
  sd.theta_scores = (Vector::Ones(d.t.size()) - w).asDiagonal() * d.X;
  sd.J_xx = Matrix::Constant(1, 1, 5.0 / 4.0);
  sd.J_xt = -d.X.colwise().sum() / (2.0 * n);
  sd.J_tt = (d.X.transpose() * d.X) / n;
  return sd;
}

/// Score decomposition for the Weibull-baseline frailty test with the
/// closed-form information blocks.
inline core::ScoreDecomposition cox_weibull_frailty_scores(const DurationData& d,
                                                           const Vector& beta_hat,
                                                           double alpha_hat) {
  const Vector w = detail::hazard_w(d, beta_hat, alpha_hat);
  const Vector logt = d.t.array().log();
  const double n = static_cast<double>(d.n());
  core::ScoreDecomposition sd;
  sd.xi_scores.resize(d.t.size(), 1);
  sd.xi_scores.col(0) = 0.5 * ((1.0 - w.array()).square() - w.array());
  sd.theta_scores.resize(d.t.size(), d.X.cols() + 1);
  const Vector one_minus_w = Vector::Ones(d.t.size()) - w;
  sd.theta_scores.leftCols(d.X.cols()) = one_minus_w.asDiagonal() * d.X;
  sd.theta_scores.rightCols(1) =
      (1.0 / alpha_hat + logt.array() * one_minus_w.array()).matrix();
  sd.J_xx = Matrix::Constant(1, 1, 5.0 / 4.0);
  sd.J_xt = weibull_fisher::xi_theta_information(d.X, beta_hat, alpha_hat).transpose() /
            (2.0 * n);
  sd.J_tt = weibull_fisher::theta_information(d.X, beta_hat, alpha_hat) / n;
  return sd;
}

/// Exponential-baseline frailty test: Z = sum(1 - 3w + w^2) / sqrt(4n).
inline core::TestReport cox_exp_frailty(const DurationData& d, const Vector& beta_hat,
                                        double alpha = 0.05) {
  d.validate();
  const Vector w = detail::hazard_w(d, beta_hat, 1.0);
  detail::require_ph_score_zero(d, w);
  const double numerator = (1.0 - 3.0 * w.array() + w.array().square()).sum();
  const double z = numerator / std::sqrt(4.0 * static_cast<double>(d.n()));
  core::TestReport report = core::one_sided_decision(z, alpha);
  report.test_name = "exp-frailty";
  report.n = d.n();
  detail::attach_beta(report, beta_hat);
  return report;
}

/// Weibull-baseline frailty test: Z = sum(1 - 3w + w^2) / sqrt(4n - 4n/q).
inline core::TestReport cox_weibull_frailty(const DurationData& d, const Vector& beta_hat,
                                            double alpha_hat, double alpha = 0.05) {
  d.validate();
  if (!(alpha_hat > 0.0)) {
    throw std::domain_error("cox_weibull_frailty: shape estimate must be positive");
  }
  const Vector w = detail::hazard_w(d, beta_hat, alpha_hat);
  detail::require_ph_score_zero(d, w);
  const double n = static_cast<double>(d.n());
  const double numerator = (1.0 - 3.0 * w.array() + w.array().square()).sum();
  const double z = numerator / std::sqrt(4.0 * n - 4.0 * n / weibull_q());
  core::TestReport report = core::one_sided_decision(z, alpha);
  report.test_name = "weibull-frailty";
  report.n = d.n();
  detail::attach_beta(report, beta_hat);
  report.nuisance_estimates.emplace_back("alpha", alpha_hat);
  return report;
}

} // namespace calpha::models
