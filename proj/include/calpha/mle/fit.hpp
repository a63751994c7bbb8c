#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "calpha/errors.hpp"
#include "calpha/models/data.hpp"

// Newton-Raphson solvers with analytic Hessians and step-halving for the
// restricted (null model) maximum likelihood estimates each test plugs in.

namespace calpha::mle {

using models::CountData;
using models::DurationData;
using models::PanelData;
using numerics::Matrix;
using numerics::Vector;

struct FitResult {
  std::vector<std::pair<std::string, double>> estimates;
  int iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
  double loglik = 0.0;
  std::vector<double> loglik_trace; // accepted-iterate values, monotone ascent

  double operator[](const std::string& name) const {
    for (const auto& [k, v] : estimates) {
      if (k == name) {
        return v;
      }
    }
    throw std::out_of_range("FitResult: no estimate named " + name);
  }
};

namespace detail {

constexpr int max_iterations = 100;
constexpr int max_halvings = 30;

inline std::vector<std::pair<std::string, double>> named_beta(const Vector& beta) {
  std::vector<std::pair<std::string, double>> out;
  out.reserve(static_cast<std::size_t>(beta.size()));
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    out.emplace_back("beta" + std::to_string(j), beta(j));
  }
  return out;
}

// Newton ascent with step halving on a concave log-likelihood over beta.
// loglik_grad_hess fills (value, gradient, Hessian) at beta.
template <typename Eval>
FitResult newton_ascent(Vector beta, double tol, Eval eval) {
  FitResult fr;
  double ll;
  Vector grad;
  Matrix hess;
  eval(beta, ll, grad, hess);
  fr.loglik_trace.push_back(ll);
  for (int it = 0; it < max_iterations; ++it) {
    fr.iterations = it;
    fr.gradient_norm = grad.norm();
    if (fr.gradient_norm < tol) {
      fr.converged = true;
      break;
    }
    Vector step = (-hess).ldlt().solve(grad);
    if (!step.allFinite()) {
      break;
    }
    // Accept an ascent step; once the log-likelihood is flat to rounding
    // noise, accept only steps that strictly shrink the score.
    const double noise = 1e-12 * (1.0 + std::abs(ll));
    double scale = 1.0;
    bool improved = false;
    for (int h = 0; h < max_halvings; ++h) {
      Vector cand = beta + scale * step;
      double cand_ll;
      Vector cand_grad;
      Matrix cand_hess;
      eval(cand, cand_ll, cand_grad, cand_hess);
      const bool ascent = cand_ll > ll;
      const bool polish = cand_ll >= ll - noise && cand_grad.norm() < grad.norm();
      if (std::isfinite(cand_ll) && (ascent || polish)) {
        beta = std::move(cand);
        ll = cand_ll;
        grad = std::move(cand_grad);
        hess = std::move(cand_hess);
        improved = true;
        fr.loglik_trace.push_back(ll);
        break;
      }
      scale *= 0.5;
    }
    if (!improved) {
      break;
    }
  }
  fr.gradient_norm = grad.norm();
  if (fr.gradient_norm < tol) {
    fr.converged = true;
  }
  fr.loglik = ll;
  fr.estimates = named_beta(beta);
  return fr;
}

} // namespace detail

/// Poisson regression MLE: solves sum_i (y_i - exp(x_i'b)) x_i = 0.
inline FitResult fit_poisson(const CountData& d) {
  d.validate();
  if ((d.y.array() == 0.0).all()) {
    throw ConvergenceError("fit_poisson: all counts are zero, the MLE diverges");
  }
  const double tol = 1e-12 * (1.0 + d.y.lpNorm<1>());
  Vector beta = Vector::Zero(d.X.cols());
  beta(0) = std::log(d.y.mean());
  auto eval = [&](const Vector& b, double& ll, Vector& grad, Matrix& hess) {
    const Vector eta = d.X * b;
    const Vector lambda = eta.array().exp();
    ll = (d.y.array() * eta.array() - lambda.array()).sum();
    grad = d.X.transpose() * (d.y - lambda);
    hess = -(d.X.transpose() * lambda.asDiagonal() * d.X);
  };
  FitResult fr = detail::newton_ascent(std::move(beta), tol, eval);
  if (!fr.converged) {
    throw ConvergenceError("fit_poisson: Newton iterations did not converge");
  }
  return fr;
}

/// Exponential proportional-hazard MLE: solves sum_i (1 - t_i exp(x_i'b)) x_i = 0.
inline FitResult fit_exponential_ph(const DurationData& d) {
  d.validate();
  // absolute target 1e-10 with a floor at the n-term cancellation noise
  const double tol = std::max(1e-10, 5e-15 * static_cast<double>(d.n()));
  Vector beta = Vector::Zero(d.X.cols());
  beta(0) = std::log(static_cast<double>(d.n()) / d.t.sum());
  auto eval = [&](const Vector& b, double& ll, Vector& grad, Matrix& hess) {
    const Vector eta = d.X * b;
    const Vector w = (eta.array() + d.t.array().log()).exp(); // t_i e^{x'b}
    ll = (eta.array() - w.array()).sum();
    grad = d.X.transpose() * (Vector::Ones(d.t.size()) - w);
    hess = -(d.X.transpose() * w.asDiagonal() * d.X);
  };
  FitResult fr = detail::newton_ascent(std::move(beta), tol, eval);
  if (!fr.converged) {
    throw ConvergenceError("fit_exponential_ph: Newton iterations did not converge");
  }
  return fr;
}

namespace detail {

// Joint (beta, alpha) score and Hessian for the Weibull PH model.
inline void weibull_eval(const DurationData& d, const Vector& beta, double alpha, double& ll,
                         Vector& grad, Matrix& hess) {
  const Eigen::Index p = d.X.cols();
  const Vector logt = d.t.array().log();
  const Vector eta = d.X * beta;
  const Vector w = (alpha * logt.array() + eta.array()).exp(); // t^a e^{x'b}
  const double n = static_cast<double>(d.n());
  ll = n * std::log(alpha) + (alpha - 1.0) * logt.sum() + eta.sum() - w.sum();
  grad.resize(p + 1);
  const Vector one_minus_w = Vector::Ones(d.t.size()) - w;
  grad.head(p) = d.X.transpose() * one_minus_w;
  grad(p) = n / alpha + logt.dot(one_minus_w);
  hess.resize(p + 1, p + 1);
  hess.topLeftCorner(p, p) = -(d.X.transpose() * w.asDiagonal() * d.X);
  const Vector wlogt = w.array() * logt.array();
  hess.block(0, p, p, 1) = -(d.X.transpose() * wlogt);
  hess.block(p, 0, 1, p) = hess.block(0, p, p, 1).transpose();
  hess(p, p) = -n / (alpha * alpha) - (wlogt.array() * logt.array()).sum();
}

} // namespace detail

/// Weibull proportional-hazard MLE for (beta, alpha). Newton on the joint
/// concave log-likelihood with an alpha > 0 guard; if Newton stalls, falls
/// back to golden-section search on the alpha profile with an exact inner
/// exponential fit on t^alpha.
inline FitResult fit_weibull_ph(const DurationData& d) {
  d.validate();
  if ((d.t.array() == d.t(0)).all()) {
    throw ConvergenceError("fit_weibull_ph: all durations equal, shape is unidentified");
  }
  const Eigen::Index p = d.X.cols();
  const double tol = std::max(1e-9, 1e-14 * static_cast<double>(d.n()));
  Vector beta = Vector::Zero(p);
  beta(0) = std::log(static_cast<double>(d.n()) / d.t.sum());
  double alpha = 1.0;

  FitResult fr;
  double ll;
  Vector grad;
  Matrix hess;
  detail::weibull_eval(d, beta, alpha, ll, grad, hess);
  fr.loglik_trace.push_back(ll);
  bool ok = false;
  for (int it = 0; it < detail::max_iterations; ++it) {
    fr.iterations = it;
    if (grad.norm() < tol) {
      ok = true;
      break;
    }
    Vector step = (-hess).ldlt().solve(grad);
    if (!step.allFinite()) {
      break;
    }
    double scale = 1.0;
    while (alpha + scale * step(p) <= 0.0) {
      scale *= 0.5;
    }
    const double noise = 1e-12 * (1.0 + std::abs(ll));
    bool improved = false;
    for (int h = 0; h < detail::max_halvings; ++h) {
      Vector cand_beta = beta + scale * step.head(p);
      double cand_alpha = alpha + scale * step(p);
      double cand_ll;
      Vector cand_grad;
      Matrix cand_hess;
      detail::weibull_eval(d, cand_beta, cand_alpha, cand_ll, cand_grad, cand_hess);
      const bool ascent = cand_ll > ll;
      const bool polish = cand_ll >= ll - noise && cand_grad.norm() < grad.norm();
      if (std::isfinite(cand_ll) && (ascent || polish)) {
        beta = std::move(cand_beta);
        alpha = cand_alpha;
        ll = cand_ll;
        grad = std::move(cand_grad);
        hess = std::move(cand_hess);
        improved = true;
        fr.loglik_trace.push_back(ll);
        break;
      }
      scale *= 0.5;
    }
    if (!improved) {
      break;
    }
  }

  if (!ok && grad.norm() >= tol) {
    // Profile fallback: golden-section on alpha, exact beta(alpha) inside.
    auto profile = [&](double a, Vector& beta_out) {
      DurationData powered{Vector(d.t.array().pow(a)), d.X};
      FitResult inner = fit_exponential_ph(powered);
      beta_out.resize(p);
      for (Eigen::Index j = 0; j < p; ++j) {
        beta_out(j) = inner.estimates[static_cast<std::size_t>(j)].second;
      }
      double pll;
      Vector pg;
      Matrix ph;
      detail::weibull_eval(d, beta_out, a, pll, pg, ph);
      return pll;
    };
    double lo = 1e-3;
    double hi = 64.0;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a1 = hi - gr * (hi - lo);
    double a2 = lo + gr * (hi - lo);
    Vector btmp(p);
    double f1 = profile(a1, btmp);
    double f2 = profile(a2, btmp);
    for (int it = 0; it < 200 && (hi - lo) > 1e-11 * (1.0 + hi); ++it) {
      if (f1 < f2) {
        lo = a1;
        a1 = a2;
        f1 = f2;
        a2 = lo + gr * (hi - lo);
        f2 = profile(a2, btmp);
      } else {
        hi = a2;
        a2 = a1;
        f2 = f1;
        a1 = hi - gr * (hi - lo);
        f1 = profile(a1, btmp);
      }
    }
    alpha = 0.5 * (lo + hi);
    profile(alpha, beta);
    detail::weibull_eval(d, beta, alpha, ll, grad, hess);
    fr.loglik_trace.push_back(ll);
  }

  fr.gradient_norm = grad.norm();
  fr.converged = fr.gradient_norm < tol;
  fr.loglik = ll;
  if (!fr.converged || !(alpha > 0.0)) {
    throw ConvergenceError("fit_weibull_ph: joint score equations not solved");
  }
  fr.estimates = detail::named_beta(beta);
  fr.estimates.emplace_back("alpha", alpha);
  return fr;
}

/// OLS for the unit-variance Gaussian regression used by the IM comparison.
inline FitResult fit_gaussian_regression(const models::GaussianRegressionData& d) {
  d.validate();
  const Vector beta = (d.X.transpose() * d.X).ldlt().solve(d.X.transpose() * d.y);
  const Vector resid = d.y - d.X * beta;
  FitResult fr;
  fr.converged = true;
  fr.iterations = 0;
  fr.gradient_norm = (d.X.transpose() * resid).norm();
  fr.loglik = -0.5 * resid.squaredNorm() -
              0.5 * static_cast<double>(d.n()) * std::log(2.0 * M_PI);
  fr.loglik_trace = {fr.loglik};
  fr.estimates = detail::named_beta(beta);
  return fr;
}

/// Gaussian panel MLE: grand mean and the NT-divisor variance.
inline FitResult fit_gaussian_panel(const PanelData& d) {
  d.validate();
  const double nt = static_cast<double>(d.N() * d.T());
  const double mu = d.Y.sum() / nt;
  const double sigma2 = (d.Y.array() - mu).square().sum() / nt;
  if (!(sigma2 > 0.0)) {
    throw DataError("fit_gaussian_panel: zero-variance panel");
  }
  FitResult fr;
  fr.converged = true;
  fr.iterations = 0;
  fr.gradient_norm = 0.0;
  fr.loglik = -0.5 * nt * (std::log(2.0 * M_PI * sigma2) + 1.0);
  fr.loglik_trace = {fr.loglik};
  fr.estimates = {{"mu", mu}, {"sigma2", sigma2}};
  return fr;
}

} // namespace calpha::mle
