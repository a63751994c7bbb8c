#pragma once

#include <cstddef>
#include <variant>

#include "calpha/errors.hpp"
#include "calpha/numerics/linalg.hpp"

namespace calpha::models {

using numerics::Matrix;
using numerics::Vector;

namespace detail {

inline void require_full_rank(const Matrix& X, const char* what) {
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  if (qr.rank() < X.cols()) {
    throw DataError(std::string(what) + ": design matrix is rank deficient");
  }
}

} // namespace detail

/// Count outcomes with a design matrix whose first column is ones.
struct CountData {
  Vector y;  // n nonnegative integers
  Matrix X;  // n x (k+1), intercept first

  std::size_t n() const { return static_cast<std::size_t>(y.size()); }

  void validate() const {
    if (y.size() != X.rows()) {
      throw DataError("CountData: y and X row counts differ");
    }
    if (X.rows() < X.cols()) {
      throw DataError("CountData: need n >= k + 1 observations");
    }
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y(i) < 0.0 || y(i) != std::floor(y(i))) {
        throw DataError("CountData: counts must be nonnegative integers");
      }
    }
    if ((X.col(0).array() != 1.0).any()) {
      throw DataError("CountData: first design column must be the intercept");
    }
    detail::require_full_rank(X, "CountData");
  }
};

/// Positive durations with a design matrix whose first column is ones.
struct DurationData {
  Vector t;  // n positive reals
  Matrix X;  // n x (k+1), intercept first

  std::size_t n() const { return static_cast<std::size_t>(t.size()); }

  void validate() const {
    if (t.size() != X.rows()) {
      throw DataError("DurationData: t and X row counts differ");
    }
    if (X.rows() < X.cols()) {
      throw DataError("DurationData: need n >= k + 1 observations");
    }
    if ((t.array() <= 0.0).any()) {
      throw DataError("DurationData: durations must be positive");
    }
    if ((X.col(0).array() != 1.0).any()) {
      throw DataError("DurationData: first design column must be the intercept");
    }
    detail::require_full_rank(X, "DurationData");
  }
};

/// Balanced N x T Gaussian panel.
struct PanelData {
  Matrix Y;  // N x T

  std::size_t N() const { return static_cast<std::size_t>(Y.rows()); }
  std::size_t T() const { return static_cast<std::size_t>(Y.cols()); }

  void validate() const {
    if (Y.rows() < 2 || Y.cols() < 2) {
      throw DataError("PanelData: need N >= 2 and T >= 2");
    }
  }
};

/// Real-valued response regression with unit error variance, used by the
/// IM-test comparison for the Gaussian family.
struct GaussianRegressionData {
  Vector y;
  Matrix X;

  std::size_t n() const { return static_cast<std::size_t>(y.size()); }

  void validate() const {
    if (y.size() != X.rows()) {
      throw DataError("GaussianRegressionData: y and X row counts differ");
    }
    if (X.rows() < X.cols()) {
      throw DataError("GaussianRegressionData: need n >= k + 1 observations");
    }
    if ((X.col(0).array() != 1.0).any()) {
      throw DataError("GaussianRegressionData: first design column must be the intercept");
    }
    detail::require_full_rank(X, "GaussianRegressionData");
  }
};

using ObservationSet = std::variant<CountData, DurationData, PanelData>;

} // namespace calpha::models
