#pragma once

#include <stdexcept>
#include <string>

namespace calpha {

/// Near-singular information matrix or degenerate covariance. Raised instead
/// of silently falling back to a pseudo-inverse.
class SingularityError : public std::runtime_error {
 public:
  explicit SingularityError(const std::string& what) : std::runtime_error(what) {}
};

/// Dataset failed validation (parse errors, impossible values, unbalanced
/// panels).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// A solver failed to reach its convergence tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace calpha
