#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "calpha/models/data.hpp"
#include "calpha/sim/rng.hpp"

// Data generators under the null and under local heterogeneity alternatives.
// The random parameter per observation is built from the base lambda_0i and
// a mean-zero unit-variance draw U_i in one of three forms:
//   multiplicative_exp  lambda_0i * exp(xi U)
//   additive            lambda_0i + xi U
//   sqrt_scaled         lambda_0i * (1 + xi U / sqrt(lambda_0i))
// Draws that would leave the parameter nonpositive are resampled and counted.

namespace calpha::sim {

enum class Model { poisson, exponential_ph, weibull_ph, gaussian_panel };
enum class UDist { gaussian, rademacher, centered_exponential };
enum class HetForm { multiplicative_exp, additive, sqrt_scaled };
enum class CovariateScheme { none, bernoulli, uniform };

struct GeneratorSpec {
  Model model = Model::poisson;
  std::vector<double> beta = {std::log(2.0)}; // regression truth, lambda_0 = exp(beta0)
  double weibull_alpha = 1.0;
  double mu0 = 0.0;
  double sigma0_sq = 1.0;
  double xi = 0.0;  // heterogeneity magnitude (location/scale models: the scalar xi)
  double xi2 = 0.0; // scale heterogeneity, gaussian_panel only
  UDist u_dist = UDist::gaussian;
  HetForm form = HetForm::multiplicative_exp;
  CovariateScheme covariates = CovariateScheme::none;
  std::size_t n = 100; // observations; panel units for gaussian_panel
  std::size_t T = 5;   // panel periods

  void validate() const {
    if (xi < 0.0 || xi2 < 0.0) {
      throw std::domain_error("GeneratorSpec: heterogeneity magnitudes must be nonnegative");
    }
    if (n < 2) {
      throw std::domain_error("GeneratorSpec: need n >= 2");
    }
    if (model == Model::gaussian_panel && T < 2) {
      throw std::domain_error("GeneratorSpec: need T >= 2");
    }
    if (model == Model::weibull_ph && !(weibull_alpha > 0.0)) {
      throw std::domain_error("GeneratorSpec: weibull shape must be positive");
    }
    if (!(sigma0_sq > 0.0)) {
      throw std::domain_error("GeneratorSpec: sigma0^2 must be positive");
    }
    if (beta.empty()) {
      throw std::domain_error("GeneratorSpec: beta must include an intercept");
    }
    if (covariates != CovariateScheme::none && beta.size() < 2) {
      throw std::domain_error("GeneratorSpec: covariate scheme needs a slope coefficient");
    }
  }
};

struct GeneratedData {
  models::ObservationSet data;
  std::size_t resampled = 0; // positivity rejections in additive / sqrt forms
};

namespace detail {

// Streams within a replication.
inline constexpr std::uint64_t stream_covariates = 0;
inline constexpr std::uint64_t stream_u = 1;
inline constexpr std::uint64_t stream_obs = 2;
inline constexpr std::uint64_t stream_u2 = 3;

inline double draw_u(CounterRng& rng, UDist dist) {
  switch (dist) {
    case UDist::gaussian:
      return rng.normal();
    case UDist::rademacher:
      return rng.rademacher();
    case UDist::centered_exponential:
      return rng.exponential() - 1.0;
  }
  throw std::domain_error("unknown U distribution");
}

// Random parameter for observation i; resamples until positive for the
// additive and sqrt forms.
inline double heterogeneous_parameter(const GeneratorSpec& spec, double lambda0,
                                      CounterRng& u_rng, std::size_t& resampled) {
  if (spec.xi == 0.0) {
    return lambda0;
  }
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double u = draw_u(u_rng, spec.u_dist);
    double lam = lambda0;
    switch (spec.form) {
      case HetForm::multiplicative_exp:
        lam = lambda0 * std::exp(spec.xi * u);
        break;
      case HetForm::additive:
        lam = lambda0 + spec.xi * u;
        break;
      case HetForm::sqrt_scaled:
        lam = lambda0 * (1.0 + spec.xi * u / std::sqrt(lambda0));
        break;
    }
    if (lam > 0.0) {
      return lam;
    }
    ++resampled;
  }
  throw std::runtime_error("generate: could not draw a positive random parameter");
}

inline numerics::Matrix draw_design(const GeneratorSpec& spec, std::uint64_t master_seed,
                                    std::uint64_t replication) {
  const Eigen::Index n = static_cast<Eigen::Index>(spec.n);
  if (spec.covariates == CovariateScheme::none) {
    return numerics::Matrix::Ones(n, 1);
  }
  numerics::Matrix X = numerics::Matrix::Ones(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    CounterRng rng(master_seed, replication, stream_covariates, static_cast<std::uint64_t>(i));
    X(i, 1) = spec.covariates == CovariateScheme::bernoulli ? (rng.uniform() < 0.5 ? 0.0 : 1.0)
                                                            : rng.uniform();
  }
  return X;
}

} // namespace detail

inline GeneratedData generate(const GeneratorSpec& spec, std::uint64_t master_seed,
                              std::uint64_t replication = 0) {
  spec.validate();
  GeneratedData out;

  if (spec.model == Model::gaussian_panel) {
    models::PanelData panel;
    panel.Y.resize(static_cast<Eigen::Index>(spec.n), static_cast<Eigen::Index>(spec.T));
    for (std::size_t i = 0; i < spec.n; ++i) {
      CounterRng u1_rng(master_seed, replication, detail::stream_u, i);
      CounterRng u2_rng(master_seed, replication, detail::stream_u2, i);
      CounterRng eps_rng(master_seed, replication, detail::stream_obs, i);
      const double mu_i =
          spec.xi == 0.0 ? spec.mu0 : spec.mu0 + spec.xi * detail::draw_u(u1_rng, spec.u_dist);
      const double sigma2_i =
          spec.xi2 == 0.0
              ? spec.sigma0_sq
              : spec.sigma0_sq * std::exp(spec.xi2 * detail::draw_u(u2_rng, spec.u_dist));
      const double sigma_i = std::sqrt(sigma2_i);
      for (std::size_t t = 0; t < spec.T; ++t) {
        panel.Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) =
            mu_i + sigma_i * eps_rng.normal();
      }
    }
    out.data = std::move(panel);
    return out;
  }

  const numerics::Matrix X = detail::draw_design(spec, master_seed, replication);
  numerics::Vector beta(static_cast<Eigen::Index>(spec.beta.size()));
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    beta(j) = spec.beta[static_cast<std::size_t>(j)];
  }
  if (X.cols() != beta.size()) {
    throw std::domain_error("generate: beta length does not match the covariate scheme");
  }
  const numerics::Vector lambda0 = (X * beta).array().exp();

  if (spec.model == Model::poisson) {
    models::CountData d;
    d.X = X;
    d.y.resize(static_cast<Eigen::Index>(spec.n));
    for (std::size_t i = 0; i < spec.n; ++i) {
      CounterRng u_rng(master_seed, replication, detail::stream_u, i);
      CounterRng obs_rng(master_seed, replication, detail::stream_obs, i);
      const double lam = detail::heterogeneous_parameter(
          spec, lambda0(static_cast<Eigen::Index>(i)), u_rng, out.resampled);
      d.y(static_cast<Eigen::Index>(i)) = static_cast<double>(obs_rng.poisson(lam));
    }
    out.data = std::move(d);
    return out;
  }

  // Duration models: hazard factor lambda_i, survival exp(-Lambda_0(t) lambda_i).
  models::DurationData d;
  d.X = X;
  d.t.resize(static_cast<Eigen::Index>(spec.n));
  const double alpha = spec.model == Model::weibull_ph ? spec.weibull_alpha : 1.0;
  for (std::size_t i = 0; i < spec.n; ++i) {
    CounterRng u_rng(master_seed, replication, detail::stream_u, i);
    CounterRng obs_rng(master_seed, replication, detail::stream_obs, i);
    const double lam = detail::heterogeneous_parameter(
        spec, lambda0(static_cast<Eigen::Index>(i)), u_rng, out.resampled);
    const double e = obs_rng.exponential();
    d.t(static_cast<Eigen::Index>(i)) = std::pow(e / lam, 1.0 / alpha);
  }
  out.data = std::move(d);
  return out;
}

inline std::string to_string(Model m) {
  switch (m) {
    case Model::poisson: return "poisson";
    case Model::exponential_ph: return "exponential-ph";
    case Model::weibull_ph: return "weibull-ph";
    case Model::gaussian_panel: return "gaussian-panel";
  }
  return "?";
}

inline std::string to_string(UDist u) {
  switch (u) {
    case UDist::gaussian: return "gaussian";
    case UDist::rademacher: return "rademacher";
    case UDist::centered_exponential: return "centered-exponential";
  }
  return "?";
}

inline std::string to_string(HetForm f) {
  switch (f) {
    case HetForm::multiplicative_exp: return "multiplicative-exp";
    case HetForm::additive: return "additive";
    case HetForm::sqrt_scaled: return "sqrt-scaled";
  }
  return "?";
}

inline std::string to_string(CovariateScheme c) {
  switch (c) {
    case CovariateScheme::none: return "none";
    case CovariateScheme::bernoulli: return "bernoulli";
    case CovariateScheme::uniform: return "uniform";
  }
  return "?";
}

} // namespace calpha::sim
