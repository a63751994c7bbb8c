#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "calpha/errors.hpp"
#include "calpha/numerics/linalg.hpp"

namespace calpha::core {

using numerics::Matrix;
using numerics::Vector;

/// Per-observation score material for an irregular C(alpha) test.
///
/// xi_scores rows hold (1/2) * d^2_xi p / p per observation (the summands of
/// S_xi,n before the 1/sqrt(n) norming); theta_scores rows hold the
/// first-order nuisance score. The J blocks are per-observation averages:
/// analytic when the model supplies them, otherwise the empirical outer
/// product of the stacked score rows.
struct ScoreDecomposition {
  Matrix xi_scores;   // n x q
  Matrix theta_scores; // n x p
  Matrix J_xx;         // q x q
  Matrix J_xt;         // q x p
  Matrix J_tt;         // p x p

  std::size_t n() const { return static_cast<std::size_t>(xi_scores.rows()); }
  std::size_t q() const { return static_cast<std::size_t>(xi_scores.cols()); }
  std::size_t p() const { return static_cast<std::size_t>(theta_scores.cols()); }

  void validate() const {
    if (xi_scores.rows() != theta_scores.rows()) {
      throw std::domain_error("ScoreDecomposition: score row counts differ");
    }
    if (xi_scores.rows() < xi_scores.cols() + theta_scores.cols()) {
      throw std::domain_error("ScoreDecomposition: need n >= q + p observations");
    }
    if (J_xx.rows() != xi_scores.cols() || J_xx.cols() != xi_scores.cols() ||
        J_xt.rows() != xi_scores.cols() || J_xt.cols() != theta_scores.cols() ||
        J_tt.rows() != theta_scores.cols() || J_tt.cols() != theta_scores.cols()) {
      throw std::domain_error("ScoreDecomposition: J block dimensions mismatch");
    }
    numerics::require_symmetric(J_xx, "J_xx");
    numerics::require_symmetric(J_tt, "J_tt");
  }

  /// Build with empirical information: J = (1/n) sum of stacked score row
  /// outer products, evaluated at the plugged-in nuisance estimate.
  static ScoreDecomposition with_empirical_information(Matrix xi, Matrix theta) {
    ScoreDecomposition sd;
    const double n = static_cast<double>(xi.rows());
    sd.J_xx = (xi.transpose() * xi) / n;
    sd.J_xt = (xi.transpose() * theta) / n;
    sd.J_tt = (theta.transpose() * theta) / n;
    sd.xi_scores = std::move(xi);
    sd.theta_scores = std::move(theta);
    sd.validate();
    return sd;
  }
};

struct ResidualScore {
  Matrix g;     // n x q residual score rows
  Matrix sigma; // q x q residual covariance J_xx - J_xt J_tt^{-1} J_tx
};

/// Project the xi scores off the span of the nuisance scores.
inline ResidualScore residual_score(const ScoreDecomposition& sd) {
  sd.validate();
  // coef = J_xt J_tt^{-1}, computed as a solve against J_tt.
  const Matrix coef = numerics::spd_solve(sd.J_tt, sd.J_xt.transpose(), "J_tt").transpose();
  ResidualScore out;
  out.g = sd.xi_scores - sd.theta_scores * coef.transpose();
  out.sigma = sd.J_xx - coef * sd.J_xt.transpose();
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose());
  const double floor = 1e-10 * std::max(out.sigma.trace(), 1e-300);
  if (numerics::min_eigenvalue(out.sigma) <= floor) {
    throw SingularityError("residual_score: residual information Sigma is not positive definite");
  }
  return out;
}

/// Scalar optimal statistic Z_n = Sigma^{-1/2} n^{-1/2} sum_i g_i for q = 1.
inline double z_statistic(const ScoreDecomposition& sd) {
  if (sd.q() != 1) {
    throw std::domain_error("z_statistic: requires a scalar tested parameter (q = 1)");
  }
  const ResidualScore rs = residual_score(sd);
  const double sigma = rs.sigma(0, 0);
  const double n = static_cast<double>(sd.n());
  return rs.g.col(0).sum() / std::sqrt(n) / std::sqrt(sigma);
}

} // namespace calpha::core
