#include <catch2/catch.hpp>
#include <cmath>
#include <random>

#include "calpha/im/im_test.hpp"
#include "calpha/mle/fit.hpp"
#include "calpha/models/poisson.hpp"

using namespace calpha;
using namespace calpha::im;
using numerics::Matrix;
using numerics::Vector;

namespace {

models::CountData random_counts(std::mt19937_64& rng, int n, bool covariate) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  models::CountData d;
  d.y.resize(n);
  d.X = Matrix::Ones(n, covariate ? 2 : 1);
  for (int i = 0; i < n; ++i) {
    if (covariate) {
      d.X(i, 1) = u(rng);
    }
    const double lam = std::exp(0.3 + (covariate ? 0.8 * d.X(i, 1) : 0.0));
    std::poisson_distribution<int> pois(lam);
    d.y(i) = pois(rng);
  }
  return d;
}

Vector fitted_beta(const models::CountData& d) {
  const auto fit = mle::fit_poisson(d);
  Vector beta(d.X.cols());
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    beta(j) = fit.estimates[static_cast<std::size_t>(j)].second;
  }
  return beta;
}

} // namespace

TEST_CASE("IM statistic equals the second moment test for poisson") {
  std::mt19937_64 rng(2718);
  for (int rep = 0; rep < 25; ++rep) {
    const auto d = random_counts(rng, 80, true);
    const Vector beta = fitted_beta(d);
    const double im = im_intercept_statistic(d, beta);
    const double z = models::poisson_second_moment(d, beta).statistic;
    CHECK(im == Approx(z).margin(1e-10));
  }
}

TEST_CASE("IM statistic hand value on the intercept-only example") {
  models::CountData d;
  d.y.resize(4);
  d.y << 0, 1, 2, 3;
  d.X = Matrix::Ones(4, 1);
  const Vector beta = fitted_beta(d);
  CHECK(im_intercept_statistic(d, beta) == Approx(-0.2357022604).margin(1e-9));
}

TEST_CASE("poisson multiplicative spec is flagged equivalent") {
  std::mt19937_64 rng(31415);
  for (int rep = 0; rep < 10; ++rep) {
    const auto d = random_counts(rng, 60, true);
    const auto report = check_equivalence(d, fitted_beta(d), HeterogeneitySpec::identity);
    CHECK(report.equivalent);
    CHECK(report.abs_diff < 1e-10);
    CHECK(report.identity1_residual < 1e-12);
    CHECK(report.identity2_residual < 1e-7);
  }
}

TEST_CASE("poisson sqrt spec with a covariate is flagged non-equivalent") {
  std::mt19937_64 rng(999);
  const auto d = random_counts(rng, 120, true);
  const auto report = check_equivalence(d, fitted_beta(d), HeterogeneitySpec::sqrt_scale);
  CHECK_FALSE(report.equivalent);
  CHECK(report.identity1_residual > 1e-4);
}

TEST_CASE("no-covariate model is equivalent for every k") {
  std::mt19937_64 rng(777);
  const auto d = random_counts(rng, 90, false);
  const Vector beta = fitted_beta(d);
  for (const auto spec :
       {HeterogeneitySpec::constant, HeterogeneitySpec::identity, HeterogeneitySpec::sqrt_scale}) {
    const auto report = check_equivalence(d, beta, spec);
    CHECK(report.equivalent);
    CHECK(report.abs_diff < 1e-10);
  }
}

TEST_CASE("identity2 residual vanishes at the poisson MLE with k = lambda") {
  std::mt19937_64 rng(1212);
  for (int rep = 0; rep < 10; ++rep) {
    const auto d = random_counts(rng, 70, true);
    const auto report = check_equivalence(d, fitted_beta(d), HeterogeneitySpec::identity);
    CHECK(report.identity2_residual < 1e-8 * (1.0 + d.y.lpNorm<1>()));
  }
}

TEST_CASE("gaussian regression: constant k is equivalent, others are not") {
  std::mt19937_64 rng(888);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  models::GaussianRegressionData d;
  const int n = 100;
  d.y.resize(n);
  d.X = Matrix::Ones(n, 2);
  for (int i = 0; i < n; ++i) {
    d.X(i, 1) = u(rng);
    d.y(i) = 1.0 + 0.7 * d.X(i, 1) + g(rng);
  }
  const auto fit = mle::fit_gaussian_regression(d);
  Vector beta(2);
  beta << fit.estimates[0].second, fit.estimates[1].second;

  const auto eq = check_equivalence(d, beta, HeterogeneitySpec::constant);
  CHECK(eq.equivalent);
  CHECK(eq.abs_diff < 1e-12);
  CHECK(eq.identity2_residual == 0.0);

  const auto neq = check_equivalence(d, beta, HeterogeneitySpec::identity);
  CHECK_FALSE(neq.equivalent);
  CHECK(neq.identity1_residual > 1e-3);
}
