#pragma once

#include <cmath>
#include <cstdint>

#include "calpha/numerics/special_functions.hpp"

// Counter-based generator for reproducible parallel Monte Carlo. Each
// (master_seed, replication, stream, unit) tuple is hashed into an
// independent splitmix64 state, so a replication's draws are a pure function
// of the key no matter which thread runs it or how many draws other streams
// consumed.

namespace calpha::sim {

inline constexpr std::uint64_t golden64 = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_key(std::uint64_t master_seed, std::uint64_t replication,
                                std::uint64_t stream, std::uint64_t unit) {
  std::uint64_t k = mix64(master_seed + golden64);
  k = mix64(k ^ (replication + golden64));
  k = mix64(k ^ (stream + golden64));
  k = mix64(k ^ (unit + golden64));
  return k;
}

class CounterRng {
 public:
  CounterRng(std::uint64_t master_seed, std::uint64_t replication, std::uint64_t stream,
             std::uint64_t unit = 0)
      : state_(derive_key(master_seed, replication, stream, unit)) {}

  std::uint64_t next_u64() {
    state_ += golden64;
    return mix64(state_);
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double exponential() {
    double e = -std::log(uniform_pos());
    while (!(e > 0.0)) {
      e = -std::log(uniform_pos());
    }
    return e;
  }

  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double theta = 2.0 * M_PI * uniform();
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

  double rademacher() { return uniform() < 0.5 ? -1.0 : 1.0; }

  /// Poisson draw: sequential inversion for small means, Hormann's PTRD
  /// transformed rejection for large ones.
  long poisson(double mean) {
    if (!(mean >= 0.0)) {
      throw std::domain_error("poisson: mean must be nonnegative");
    }
    if (mean == 0.0) {
      return 0;
    }
    if (mean < 10.0) {
      const double L = std::exp(-mean);
      long k = 0;
      double prod = uniform();
      while (prod > L && k < 10000) {
        ++k;
        prod *= uniform();
      }
      return k;
    }
    return poisson_ptrd(mean);
  }

 private:
  long poisson_ptrd(double mu) {
    const double smu = std::sqrt(mu);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mu = std::log(mu);
    for (int guard = 0; guard < 100000; ++guard) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::abs(u);
      const double kf = std::floor((2.0 * a / us + b) * u + mu + 0.43);
      if (us >= 0.07 && v <= v_r) {
        return static_cast<long>(kf);
      }
      if (kf < 0.0 || (us < 0.013 && v > us)) {
        continue;
      }
      const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
      const double rhs = -mu + kf * log_mu - numerics::log_gamma(kf + 1.0);
      if (lhs <= rhs) {
        return static_cast<long>(kf);
      }
    }
    throw std::runtime_error("poisson_ptrd: rejection loop failed to terminate");
  }

  std::uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

inline constexpr const char* seed_rule_description =
    "per-draw key = splitmix64 chain over (master_seed, replication, stream, unit)";

} // namespace calpha::sim
