#pragma once

#include <cmath>

#include "calpha/core/score_decomposition.hpp"
#include "calpha/core/test_report.hpp"
#include "calpha/models/data.hpp"

// Overdispersion tests for Poisson regression. Two alternative forms of the
// random mean parameter lead to two statistics:
//   second moment     lambda_i = lambda_0i * exp(xi U_i)
//   second factorial  lambda_i = lambda_0i * (1 + xi U_i / sqrt(lambda_0i))
// Both plug in the restricted Poisson MLE for beta.

namespace calpha::models {

namespace detail {

inline Vector poisson_means(const CountData& d, const Vector& beta_hat) {
  return (d.X * beta_hat).array().exp();
}

inline void require_normal_equations(const CountData& d, const Vector& lambda) {
  const Vector grad = d.X.transpose() * (d.y - lambda);
  if (grad.norm() > 1e-6 * (1.0 + d.y.lpNorm<1>())) {
    throw ConvergenceError("poisson test: beta_hat does not solve the normal equations");
  }
}

inline void append_degeneracy_warning(const CountData& d, core::TestReport& report) {
  if ((d.y.array() == d.y(0)).all()) {
    report.warnings.push_back("degenerate data: all counts equal");
  }
}

} // namespace detail

/// Analytic score decomposition for the multiplicative (second moment) form.
/// Per observation: s = (y - lambda)^2 - lambda, theta score (y - lambda) x,
/// Var(s) = lambda + 2 lambda^2, Cov(s, theta) = lambda x'.
inline core::ScoreDecomposition poisson_second_moment_scores(const CountData& d,
                                                             const Vector& beta_hat) {
  const Vector lambda = detail::poisson_means(d, beta_hat);
  const double n = static_cast<double>(d.n());
  core::ScoreDecomposition sd;
  sd.xi_scores.resize(d.y.size(), 1);
  sd.xi_scores.col(0) = 0.5 * ((d.y - lambda).array().square() - lambda.array());
  sd.theta_scores = (d.y - lambda).asDiagonal() * d.X;
  sd.J_xx = Matrix::Constant(1, 1, (lambda.array() + 2.0 * lambda.array().square()).sum() / (4.0 * n));
  sd.J_xt = (lambda.transpose() * d.X) / (2.0 * n);
  sd.J_tt = (d.X.transpose() * lambda.asDiagonal() * d.X) / n;
  return sd;
}

/// Analytic score decomposition for the sqrt-scaled (second factorial) form.
/// Per observation: s = [y(y-1) - 2 lambda (y-lambda) - lambda^2] / lambda,
/// Var(s) = 2, and s is already orthogonal to the beta scores.
inline core::ScoreDecomposition poisson_second_factorial_scores(const CountData& d,
                                                                const Vector& beta_hat) {
  const Vector lambda = detail::poisson_means(d, beta_hat);
  const double n = static_cast<double>(d.n());
  core::ScoreDecomposition sd;
  sd.xi_scores.resize(d.y.size(), 1);
  sd.xi_scores.col(0) =
      0.5 * ((d.y.array() * (d.y.array() - 1.0) - 2.0 * lambda.array() * (d.y - lambda).array() -
              lambda.array().square()) /
             lambda.array());
  sd.theta_scores = (d.y - lambda).asDiagonal() * d.X;
  sd.J_xx = Matrix::Constant(1, 1, 0.5);
  sd.J_xt = Matrix::Zero(1, d.X.cols());
  sd.J_tt = (d.X.transpose() * lambda.asDiagonal() * d.X) / n;
  return sd;
}

/// Second moment test: Z = sum[(y - l)^2 - l] / sqrt(2 sum l^2).
inline core::TestReport poisson_second_moment(const CountData& d, const Vector& beta_hat,
                                              double alpha = 0.05) {
  d.validate();
  const Vector lambda = detail::poisson_means(d, beta_hat);
  detail::require_normal_equations(d, lambda);
  const double numerator = ((d.y - lambda).array().square() - lambda.array()).sum();
  const double z = numerator / std::sqrt(2.0 * lambda.array().square().sum());
  core::TestReport report = core::one_sided_decision(z, alpha);
  report.test_name = "poisson-secmom";
  report.n = d.n();
  for (Eigen::Index j = 0; j < beta_hat.size(); ++j) {
    report.nuisance_estimates.emplace_back("beta" + std::to_string(j), beta_hat(j));
  }
  detail::append_degeneracy_warning(d, report);
  return report;
}

/// Second factorial moment test: Z = (2n)^{-1/2} sum [y(y-1) - l^2] / l.
inline core::TestReport poisson_second_factorial(const CountData& d, const Vector& beta_hat,
                                                 double alpha = 0.05) {
  d.validate();
  const Vector lambda = detail::poisson_means(d, beta_hat);
  detail::require_normal_equations(d, lambda);
  const double numerator =
      ((d.y.array() * (d.y.array() - 1.0) - lambda.array().square()) / lambda.array()).sum();
  const double z = numerator / std::sqrt(2.0 * static_cast<double>(d.n()));
  core::TestReport report = core::one_sided_decision(z, alpha);
  report.test_name = "poisson-secfac";
  report.n = d.n();
  for (Eigen::Index j = 0; j < beta_hat.size(); ++j) {
    report.nuisance_estimates.emplace_back("beta" + std::to_string(j), beta_hat(j));
  }
  detail::append_degeneracy_warning(d, report);
  return report;
}

} // namespace calpha::models
