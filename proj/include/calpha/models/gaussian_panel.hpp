#pragma once

#include <cmath>

#include "calpha/core/cone.hpp"
#include "calpha/core/score_decomposition.hpp"
#include "calpha/core/test_report.hpp"
#include "calpha/models/data.hpp"

// Joint test for location and scale heterogeneity in a balanced Gaussian
// panel y_it = mu_i + sigma_i eps_it. Per unit i, with Z_i defined through
// 2 Z_i = sum_t (y_it - mu)^2 / sigma^2:
//   v1 = ((ybar_i - mu) / (sigma^2/T))^2 - T / sigma^2
//   v2 = (Z_i - T/2)^2 - Z_i
//   v3 = (ybar_i - mu) / (sigma^2/T)
//   v4 = (Z_i - T/2) / sigma^2

namespace calpha::models {

namespace panel_fisher {

/// Full 4x4 information matrix for (xi1, xi2, mu, sigma^2).
inline Matrix information(std::size_t N, std::size_t T, double sigma2) {
  const double nt = static_cast<double>(N * T);
  const double Td = static_cast<double>(T);
  Matrix I(4, 4);
  I << 2.0 * Td, sigma2, 0.0, 1.0,
       sigma2, (Td + 3.0) * sigma2 * sigma2 / 2.0, 0.0, sigma2 / 2.0,
       0.0, 0.0, sigma2, 0.0,
       1.0, sigma2 / 2.0, 0.0, 0.5;
  return (nt / (sigma2 * sigma2)) * I;
}

/// Residual information I_{xi.theta} = diag(2NT(T-1)/sigma^4, NT(T/2+1)).
inline Eigen::Vector2d residual_information_diag(std::size_t N, std::size_t T, double sigma2) {
  const double nt = static_cast<double>(N * T);
  const double Td = static_cast<double>(T);
  return {2.0 * nt * (Td - 1.0) / (sigma2 * sigma2), nt * (Td / 2.0 + 1.0)};
}

/// Projection coefficient I_{xi theta} I_{theta theta}^{-1} = [[0, 2], [0, sigma^2]].
inline Matrix xi_theta_coefficient(double sigma2) {
  Matrix c(2, 2);
  c << 0.0, 2.0, 0.0, sigma2;
  return c;
}

} // namespace panel_fisher

namespace detail {

struct PanelScores {
  Vector v1, v2, v3, v4;
};

inline PanelScores panel_scores(const PanelData& d, double mu, double sigma2) {
  const double Td = static_cast<double>(d.T());
  const Eigen::Index N = d.Y.rows();
  PanelScores s;
  s.v1.resize(N);
  s.v2.resize(N);
  s.v3.resize(N);
  s.v4.resize(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const double ybar = d.Y.row(i).mean();
    const double zi = (d.Y.row(i).array() - mu).square().sum() / (2.0 * sigma2);
    const double std_mean = (ybar - mu) / (sigma2 / Td);
    s.v1(i) = std_mean * std_mean - Td / sigma2;
    s.v2(i) = (zi - Td / 2.0) * (zi - Td / 2.0) - zi;
    s.v3(i) = std_mean;
    s.v4(i) = (zi - Td / 2.0) / sigma2;
  }
  return s;
}

} // namespace detail

/// Score decomposition over panel units (n = N) with closed-form blocks.
inline core::ScoreDecomposition gaussian_panel_scores(const PanelData& d, double mu,
                                                      double sigma2) {
  const auto s = detail::panel_scores(d, mu, sigma2);
  const double N = static_cast<double>(d.N());
  core::ScoreDecomposition sd;
  sd.xi_scores.resize(s.v1.size(), 2);
  sd.xi_scores.col(0) = 0.5 * s.v1;
  sd.xi_scores.col(1) = 0.5 * s.v2;
  sd.theta_scores.resize(s.v3.size(), 2);
  sd.theta_scores.col(0) = s.v3;
  sd.theta_scores.col(1) = s.v4;
  const Matrix I = panel_fisher::information(d.N(), d.T(), sigma2);
  sd.J_xx = I.topLeftCorner(2, 2) / (4.0 * N);
  sd.J_xt = I.topRightCorner(2, 2) / (2.0 * N);
  sd.J_tt = I.bottomRightCorner(2, 2) / N;
  return sd;
}

/// Joint heterogeneity test: T_n = (0 v t1n)^2 + (0 v t2n)^2 against the
/// 1/4, 1/2, 1/4 chi-bar-squared mixture.
inline core::TestReport gaussian_panel_joint(const PanelData& d, double mu, double sigma2,
                                             double alpha = 0.05) {
  d.validate();
  if (!(sigma2 > 0.0)) {
    throw DataError("gaussian_panel_joint: zero variance data");
  }
  const auto s = detail::panel_scores(d, mu, sigma2);
  const Eigen::Vector2d resid_info = panel_fisher::residual_information_diag(d.N(), d.T(), sigma2);
  const Matrix coef = panel_fisher::xi_theta_coefficient(sigma2);
  const double sum_v4 = s.v4.sum();
  const double t1 = (s.v1.sum() - coef(0, 1) * sum_v4) / std::sqrt(resid_info(0));
  const double t2 = (s.v2.sum() - coef(1, 1) * sum_v4) / std::sqrt(resid_info(1));
  const double t_stat = std::max(0.0, t1) * std::max(0.0, t1) +
                        std::max(0.0, t2) * std::max(0.0, t2);
  core::TestReport report = core::mixture_decision(t_stat, alpha, core::diag_weights(2));
  report.test_name = "gaussian-panel";
  report.components = {{t1, t2}};
  report.n = d.N() * d.T();
  report.nuisance_estimates = {{"mu", mu}, {"sigma2", sigma2}};
  return report;
}

} // namespace calpha::models
