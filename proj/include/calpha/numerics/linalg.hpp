#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "calpha/errors.hpp"

namespace calpha::numerics {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline bool is_symmetric(const Matrix& m, double tol = 1e-12) {
  if (m.rows() != m.cols()) {
    return false;
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

inline void require_symmetric(const Matrix& m, const std::string& name) {
  if (!is_symmetric(m)) {
    throw std::domain_error(name + " must be symmetric");
  }
}

/// Smallest eigenvalue of a symmetric matrix.
inline double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Solve S X = B for symmetric positive definite S. Raises SingularityError
/// when the smallest eigenvalue falls below 1e-10 * trace.
inline Matrix spd_solve(const Matrix& S, const Matrix& B, const std::string& name) {
  require_symmetric(S, name);
  const double floor = 1e-10 * std::max(S.trace(), 1e-300);
  if (min_eigenvalue(S) <= floor) {
    throw SingularityError(name + " is singular or not positive definite");
  }
  return S.ldlt().solve(B);
}

inline Matrix spd_inverse(const Matrix& S, const std::string& name) {
  return spd_solve(S, Matrix::Identity(S.rows(), S.cols()), name);
}

/// Closed-form Cholesky factor of a 2x2 SPD matrix:
///   [ sqrt(v1)          0                      ]
///   [ rho*sqrt(v2)      sqrt(v2)*sqrt(1-rho^2) ]
/// with rho = s12 / sqrt(v1 v2). |rho| = 1 (or worse) is rejected: a perfect
/// linear relationship between the two scores leaves no bivariate test.
inline Eigen::Matrix2d cholesky2(const Eigen::Matrix2d& S) {
  if (std::abs(S(0, 1) - S(1, 0)) > 1e-12 * std::max(1.0, S.cwiseAbs().maxCoeff())) {
    throw std::domain_error("cholesky2: matrix must be symmetric");
  }
  const double v1 = S(0, 0);
  const double v2 = S(1, 1);
  const double s12 = 0.5 * (S(0, 1) + S(1, 0));
  const double scale = std::max({std::abs(v1), std::abs(v2), std::abs(s12), 1e-300});
  const double det = v1 * v2 - s12 * s12;
  if (v1 <= 1e-12 * scale || det <= 1e-12 * scale * scale) {
    throw SingularityError("cholesky2: matrix is not positive definite");
  }
  const double rho = s12 / std::sqrt(v1 * v2);
  Eigen::Matrix2d L;
  L << std::sqrt(v1), 0.0, rho * std::sqrt(v2), std::sqrt(v2) * std::sqrt(1.0 - rho * rho);
  return L;
}

} // namespace calpha::numerics
