#include <catch2/catch.hpp>
#include <cmath>
#include <random>

#include "calpha/mle/fit.hpp"
#include "calpha/models/duration.hpp"
#include "calpha/models/gaussian_panel.hpp"
#include "calpha/models/poisson.hpp"

using namespace calpha;
using namespace calpha::models;
using numerics::Matrix;
using numerics::Vector;

namespace {

CountData intercept_counts(std::initializer_list<double> ys) {
  CountData d;
  d.y = Vector(static_cast<Eigen::Index>(ys.size()));
  Eigen::Index i = 0;
  for (double v : ys) d.y(i++) = v;
  d.X = Matrix::Ones(d.y.size(), 1);
  return d;
}

Vector beta_of(const mle::FitResult& fr, Eigen::Index p) {
  Vector beta(p);
  for (Eigen::Index j = 0; j < p; ++j) beta(j) = fr.estimates[static_cast<std::size_t>(j)].second;
  return beta;
}

} // namespace

TEST_CASE("poisson second moment hand values") {
  {
    auto d = intercept_counts({0, 2});
    // need n > k+1, two obs with one column is fine
    auto fr = mle::fit_poisson(d);
    auto rep = poisson_second_moment(d, beta_of(fr, 1));
    CHECK(rep.statistic == Approx(0.0).margin(1e-12));
  }
  {
    auto d = intercept_counts({0, 1, 2, 3});
    auto fr = mle::fit_poisson(d);
    auto rep = poisson_second_moment(d, beta_of(fr, 1));
    CHECK(rep.statistic == Approx(-1.0 / std::sqrt(18.0)).margin(1e-10));
    CHECK(rep.statistic == Approx(-0.2357022604).margin(1e-9));
    CHECK_FALSE(rep.reject);
    // the generic scalar statistic gives the same value
    const double z = core::z_statistic(poisson_second_moment_scores(d, beta_of(fr, 1)));
    CHECK(z == Approx(-0.2357022604).margin(1e-9));
  }
}

TEST_CASE("poisson second factorial hand values and reduction") {
  {
    auto d = intercept_counts({0, 2});
    auto fr = mle::fit_poisson(d);
    auto rep = poisson_second_factorial(d, beta_of(fr, 1));
    CHECK(rep.statistic == Approx(0.0).margin(1e-12));
  }
  {
    auto d = intercept_counts({0, 1, 2, 3});
    auto fr = mle::fit_poisson(d);
    auto rep = poisson_second_factorial(d, beta_of(fr, 1));
    CHECK(rep.statistic == Approx(-0.2357022604).margin(1e-9));
  }
}

TEST_CASE("intercept-only: the two poisson statistics agree on any dataset") {
  std::mt19937_64 rng(100);
  std::poisson_distribution<int> pois(2.5);
  for (int rep = 0; rep < 30; ++rep) {
    CountData d;
    const int n = 30;
    d.y.resize(n);
    d.X = Matrix::Ones(n, 1);
    bool all_zero = true;
    for (int i = 0; i < n; ++i) {
      d.y(i) = pois(rng);
      all_zero = all_zero && d.y(i) == 0.0;
    }
    if (all_zero) continue;
    auto fr = mle::fit_poisson(d);
    const Vector beta = beta_of(fr, 1);
    const double z1 = poisson_second_moment(d, beta).statistic;
    const double z2 = poisson_second_factorial(d, beta).statistic;
    CHECK(z1 == Approx(z2).margin(1e-10));
  }
}

TEST_CASE("with a covariate the two poisson statistics differ") {
  CountData d;
  d.y.resize(4);
  d.y << 0, 1, 2, 3;
  d.X = Matrix::Ones(4, 2);
  d.X.col(1) << 0.0, 0.0, 1.0, 1.0;
  auto fr = mle::fit_poisson(d);
  const Vector beta = beta_of(fr, 2);
  const double z1 = poisson_second_moment(d, beta).statistic;
  const double z2 = poisson_second_factorial(d, beta).statistic;
  // direct evaluation of both formulas after the two-group closed-form fit
  const double l0 = 0.5, l1 = 2.5;
  const double num1 = ((0 - l0) * (0 - l0) - l0) + ((1 - l0) * (1 - l0) - l0) +
                      ((2 - l1) * (2 - l1) - l1) + ((3 - l1) * (3 - l1) - l1);
  const double den1 = std::sqrt(2.0 * (2 * l0 * l0 + 2 * l1 * l1));
  CHECK(z1 == Approx(num1 / den1).margin(1e-10));
  const double num2 = (0.0 - l0 * l0) / l0 + (0.0 - l0 * l0) / l0 + (2.0 - l1 * l1) / l1 +
                      (6.0 - l1 * l1) / l1;
  CHECK(z2 == Approx(num2 / std::sqrt(8.0)).margin(1e-10));
  CHECK(std::abs(z1 - z2) > 5e-3);
}

TEST_CASE("degenerate count data is reported with a warning") {
  auto d = intercept_counts({3, 3, 3, 3});
  auto fr = mle::fit_poisson(d);
  auto rep = poisson_second_moment(d, beta_of(fr, 1));
  CHECK(std::isfinite(rep.statistic));
  REQUIRE_FALSE(rep.warnings.empty());
  CHECK(rep.statistic == Approx(-std::sqrt(4.0 / 2.0)).margin(1e-10));
}

TEST_CASE("generic machinery reproduces the printed poisson statistic") {
  std::mt19937_64 rng(55);
  std::poisson_distribution<int> pois(2.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CountData d;
  const int n = 120;
  d.y.resize(n);
  d.X = Matrix::Ones(n, 2);
  for (int i = 0; i < n; ++i) {
    d.X(i, 1) = u(rng);
    d.y(i) = pois(rng);
  }
  auto fr = mle::fit_poisson(d);
  const Vector beta = beta_of(fr, 2);
  const double z_printed = poisson_second_moment(d, beta).statistic;
  const double z_generic = core::z_statistic(poisson_second_moment_scores(d, beta));
  CHECK(z_generic == Approx(z_printed).margin(1e-8));

  const double zf_printed = poisson_second_factorial(d, beta).statistic;
  const double zf_generic = core::z_statistic(poisson_second_factorial_scores(d, beta));
  CHECK(zf_generic == Approx(zf_printed).margin(1e-8));

  // the poisson projection coefficient is the first unit vector
  const auto sd = poisson_second_moment_scores(d, beta);
  const Matrix coef =
      numerics::spd_solve(sd.J_tt, sd.J_xt.transpose(), "J_tt").transpose() * 2.0;
  CHECK(coef(0, 0) == Approx(1.0).margin(1e-10));
  CHECK(coef(0, 1) == Approx(0.0).margin(1e-10));
}

TEST_CASE("cox exponential frailty hand values") {
  DurationData d;
  d.t.resize(2);
  d.t << 1.0, 1.0;
  d.X = Matrix::Ones(2, 1);
  auto fr = mle::fit_exponential_ph(d);
  auto rep = cox_exp_frailty(d, beta_of(fr, 1));
  CHECK(rep.statistic == Approx(-0.7071067812).margin(1e-9));
}

TEST_CASE("exponential test is zero when the first two plug-in moments match") {
  // t = (a, a, b) with 2a + b = 3 and 2a^2 + b^2 = 6 gives, at the MLE
  // e^b = 1, first moment 1 and second moment 2 per observation, so the
  // numerator 3 - 3*3 + 6 vanishes.
  const double a = 1.0 - std::sqrt(0.5);
  const double b = 3.0 - 2.0 * a;
  DurationData d;
  d.t.resize(3);
  d.t << a, a, b;
  d.X = Matrix::Ones(3, 1);
  auto fr = mle::fit_exponential_ph(d);
  CHECK(fr["beta0"] == Approx(0.0).margin(1e-10));
  auto rep = cox_exp_frailty(d, beta_of(fr, 1));
  CHECK(rep.statistic == Approx(0.0).margin(1e-9));
}

TEST_CASE("exponential moment identity makes the first-order term vanish") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    DurationData d;
    const int n = 60;
    d.t.resize(n);
    d.X = Matrix::Ones(n, 2);
    for (int i = 0; i < n; ++i) {
      d.X(i, 1) = u(rng) < 0.5 ? 0.0 : 1.0;
      d.t(i) = -std::log(1.0 - u(rng)) * std::exp(-0.4 * d.X(i, 1));
    }
    auto fr = mle::fit_exponential_ph(d);
    const Vector beta = beta_of(fr, 2);
    const Vector w = (d.t.array().log() + (d.X * beta).array()).exp();
    const double with_term =
        ((1.0 - 3.0 * w.array() + w.array().square()) + (1.0 - w.array())).sum();
    const double without_term = (1.0 - 3.0 * w.array() + w.array().square()).sum();
    CHECK(with_term == Approx(without_term).margin(1e-10));
    // generic machinery route
    const double z_generic = core::z_statistic(cox_exp_frailty_scores(d, beta));
    const double z_printed = cox_exp_frailty(d, beta).statistic;
    CHECK(z_generic == Approx(z_printed).margin(1e-8));
  }
}

TEST_CASE("weibull frailty constants and closed-form information algebra") {
  CHECK(weibull_q() == Approx(1.4661874728435735).margin(1e-9));
  CHECK(4.0 - 4.0 / weibull_q() == Approx(1.27183592).margin(1e-7));

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 40;
    Matrix X = Matrix::Ones(n, 3);
    for (int i = 0; i < n; ++i) {
      X(i, 1) = u(rng);
      X(i, 2) = g(rng);
    }
    Vector beta(3);
    beta << g(rng), g(rng), g(rng);
    const double alpha = 0.3 + 2.0 * u(rng);

    const Matrix info = weibull_fisher::theta_information(X, beta, alpha);
    const Matrix inv = weibull_fisher::theta_information_inverse(X, beta, alpha);
    const Matrix prod = info * inv;
    CHECK((prod - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);

    // residual variance identity: n (4 - 4/q)
    const double resid = weibull_fisher::residual_variance(X, beta, alpha);
    CHECK(resid == Approx(n * (4.0 - 4.0 / weibull_q())).margin(1e-8));

    // and its alpha-row of the projection coefficient is -2 alpha / q
    const Vector row = weibull_fisher::xi_theta_information(X, beta, alpha);
    const Vector a = inv * row;
    CHECK(a(3) == Approx(-2.0 * alpha / weibull_q()).margin(1e-9));
  }
}

TEST_CASE("weibull frailty statistic routes agree") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DurationData d;
  const int n = 400;
  d.t.resize(n);
  d.X = Matrix::Ones(n, 2);
  for (int i = 0; i < n; ++i) {
    d.X(i, 1) = u(rng) < 0.5 ? 0.0 : 1.0;
    const double e = -std::log(1.0 - u(rng));
    d.t(i) = std::pow(e * std::exp(-0.5 * d.X(i, 1)), 1.0 / 1.4);
  }
  auto fr = mle::fit_weibull_ph(d);
  const Vector beta = beta_of(fr, 2);
  const double alpha_hat = fr["alpha"];
  const double z_printed = cox_weibull_frailty(d, beta, alpha_hat).statistic;
  const double z_generic = core::z_statistic(cox_weibull_frailty_scores(d, beta, alpha_hat));
  CHECK(z_generic == Approx(z_printed).margin(1e-6));

  // alpha = 1 path: numerator identical to the exponential numerator
  const Vector w1 = (d.t.array().log() + (d.X * beta).array()).exp();
  const double num_exp = (1.0 - 3.0 * w1.array() + w1.array().square()).sum();
  const Vector w2 = (1.0 * d.t.array().log() + (d.X * beta).array()).exp();
  const double num_wei = (1.0 - 3.0 * w2.array() + w2.array().square()).sum();
  CHECK(num_exp == Approx(num_wei).margin(1e-12));
}

TEST_CASE("gaussian panel hand values") {
  PanelData d;
  d.Y.resize(2, 2);
  d.Y << 1.0, -1.0, -1.0, 1.0;
  auto fr = mle::fit_gaussian_panel(d);
  auto rep = gaussian_panel_joint(d, fr["mu"], fr["sigma2"], 0.05);
  REQUIRE(rep.components.has_value());
  CHECK((*rep.components)[0] == Approx(-std::sqrt(2.0)).margin(1e-9));
  CHECK((*rep.components)[1] == Approx(-1.0 / std::sqrt(2.0)).margin(1e-9));
  CHECK(rep.statistic == 0.0);
  CHECK(rep.p_value == 1.0);
  CHECK_FALSE(rep.reject);
  CHECK(rep.critical_value == Approx(4.2305991778314977).margin(1e-8));
}

TEST_CASE("gaussian panel location-scale equivariance") {
  std::mt19937_64 rng(123);
  std::normal_distribution<double> g(0.0, 1.0);
  PanelData d;
  d.Y.resize(30, 4);
  for (Eigen::Index i = 0; i < d.Y.rows(); ++i) {
    for (Eigen::Index t = 0; t < d.Y.cols(); ++t) {
      d.Y(i, t) = g(rng);
    }
  }
  auto fr = mle::fit_gaussian_panel(d);
  auto base = gaussian_panel_joint(d, fr["mu"], fr["sigma2"], 0.05);
  PanelData shifted;
  shifted.Y = 3.0 - 2.5 * d.Y.array();
  auto fr2 = mle::fit_gaussian_panel(shifted);
  auto moved = gaussian_panel_joint(shifted, fr2["mu"], fr2["sigma2"], 0.05);
  CHECK((*moved.components)[0] == Approx((*base.components)[0]).margin(1e-10));
  CHECK((*moved.components)[1] == Approx((*base.components)[1]).margin(1e-10));
  CHECK(moved.statistic == Approx(base.statistic).margin(1e-10));
}

TEST_CASE("panel information closed forms for random draws") {
  std::mt19937_64 rng(321);
  std::uniform_real_distribution<double> u(0.2, 4.0);
  std::uniform_int_distribution<int> un(2, 40);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t N = static_cast<std::size_t>(un(rng));
    const std::size_t T = static_cast<std::size_t>(un(rng));
    const double s2 = u(rng);
    const Matrix I = panel_fisher::information(N, T, s2);
    const Matrix I_tt = I.bottomRightCorner(2, 2);
    const Matrix I_xt = I.topRightCorner(2, 2);
    const Matrix I_xx = I.topLeftCorner(2, 2);
    const Matrix coef = numerics::spd_solve(I_tt, I_xt.transpose(), "I_tt").transpose();
    CHECK(coef(0, 0) == Approx(0.0).margin(1e-10));
    CHECK(coef(0, 1) == Approx(2.0).margin(1e-10));
    CHECK(coef(1, 0) == Approx(0.0).margin(1e-10));
    CHECK(coef(1, 1) == Approx(s2).margin(1e-10));
    const Matrix resid = I_xx - coef * I_xt.transpose();
    const Eigen::Vector2d want = panel_fisher::residual_information_diag(N, T, s2);
    CHECK(resid(0, 0) == Approx(want(0)).epsilon(1e-10));
    CHECK(resid(1, 1) == Approx(want(1)).epsilon(1e-10));
    CHECK(resid(0, 1) == Approx(0.0).margin(1e-8 * want(0)));
  }
}

TEST_CASE("panel statistic agrees with the diagonal machinery") {
  std::mt19937_64 rng(222);
  std::normal_distribution<double> g(0.0, 1.0);
  PanelData d;
  d.Y.resize(50, 5);
  for (Eigen::Index i = 0; i < d.Y.rows(); ++i) {
    for (Eigen::Index t = 0; t < d.Y.cols(); ++t) {
      d.Y(i, t) = 0.3 + 1.7 * g(rng);
    }
  }
  auto fr = mle::fit_gaussian_panel(d);
  auto rep = gaussian_panel_joint(d, fr["mu"], fr["sigma2"], 0.05);
  const auto sd = gaussian_panel_scores(d, fr["mu"], fr["sigma2"]);
  const auto rs = core::residual_score(sd);
  numerics::Vector resid(2), sig(2);
  const double N = static_cast<double>(d.N());
  resid(0) = rs.g.col(0).sum() / std::sqrt(N);
  resid(1) = rs.g.col(1).sum() / std::sqrt(N);
  sig(0) = rs.sigma(0, 0);
  sig(1) = rs.sigma(1, 1);
  const double t_generic = core::diag_T(resid, sig);
  CHECK(t_generic == Approx(rep.statistic).margin(1e-10));
}
