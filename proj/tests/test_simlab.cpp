#include <catch2/catch.hpp>
#include <cmath>

#include "calpha/io/report.hpp"
#include "calpha/sim/experiments.hpp"

using namespace calpha;
using namespace calpha::sim;

TEST_CASE("power_prediction closed forms") {
  CHECK(power_prediction(0.0, 2.0, 0.05) == Approx(0.05).margin(1e-12));
  // shift = z_{0.95} -> power one half
  const double z95 = numerics::normal_quantile(0.95);
  CHECK(power_prediction(std::sqrt(z95), 1.0, 0.05) == Approx(0.5).margin(1e-12));
  // shift = 3: 1 - Phi(z95 - 3)
  const double want = 1.0 - numerics::normal_cdf(z95 - 3.0);
  CHECK(power_prediction(std::sqrt(3.0), 1.0, 0.05) == Approx(want).margin(1e-12));
  CHECK(power_prediction(std::sqrt(3.0), 1.0, 0.05) == Approx(0.9123).margin(1e-4));
  // delta = 1.5, J_resid = 2: 1 - Phi(z95 - 2.25 sqrt(2)), 30-digit value
  CHECK(power_prediction(1.5, 2.0, 0.05) == Approx(0.93786888018612305).margin(1e-12));
  CHECK_THROWS_AS(power_prediction(1.0, 0.0, 0.05), std::domain_error);
}

TEST_CASE("simulation reports are byte-identical across thread counts") {
  GeneratorSpec spec;
  spec.model = Model::gaussian_panel;
  spec.n = 40;
  spec.T = 4;
  const auto r1 = size_power_experiment(spec, TestChoice::gaussian_panel, 0.05, 200, 777, 1);
  const auto r4 = size_power_experiment(spec, TestChoice::gaussian_panel, 0.05, 200, 777, 4);
  const auto r8 = size_power_experiment(spec, TestChoice::gaussian_panel, 0.05, 200, 777, 8);
  const std::string s1 = io::render_report(r1, "simulate", 777, "json");
  const std::string s4 = io::render_report(r4, "simulate", 777, "json");
  const std::string s8 = io::render_report(r8, "simulate", 777, "json");
  CHECK(s1 == s4);
  CHECK(s1 == s8);

  GeneratorSpec pspec;
  pspec.model = Model::poisson;
  pspec.n = 150;
  pspec.covariates = CovariateScheme::bernoulli;
  pspec.beta = {std::log(2.0), 0.3};
  const auto p1 = size_power_experiment(pspec, TestChoice::poisson_secmom, 0.05, 150, 42, 1);
  const auto p5 = size_power_experiment(pspec, TestChoice::poisson_secmom, 0.05, 150, 42, 5);
  CHECK(io::render_report(p1, "simulate", 42, "json") ==
        io::render_report(p5, "simulate", 42, "json"));
}

TEST_CASE("null statistic distribution is near standard normal for every scalar test") {
  struct Case {
    TestChoice choice;
    Model model;
  };
  const Case cases[] = {{TestChoice::poisson_secmom, Model::poisson},
                        {TestChoice::poisson_secfac, Model::poisson},
                        {TestChoice::exp_frailty, Model::exponential_ph},
                        {TestChoice::weibull_frailty, Model::weibull_ph}};
  for (const auto& c : cases) {
    GeneratorSpec spec;
    spec.model = c.model;
    spec.weibull_alpha = 1.5;
    spec.beta = {std::log(2.0)};
    spec.n = 5000;
    const auto r = size_power_experiment(spec, c.choice, 0.05, 2000, 2026, 1);
    INFO(to_string(c.choice));
    CHECK(r.ks_distance_to_null < 0.04);
    CHECK(r.excluded == 0);
  }
}

TEST_CASE("weibull null behavior with the q-normalized denominator") {
  // The denominator sqrt(4n - 4n/q) understates the plug-in score variance:
  // the measured Var(Z) under the null is about 1.23, so the test rejects
  // around 0.07 at nominal 0.05. Calibration run (n = 2000, 2000 reps,
  // seed 505) observed size 0.0735 and variance 1.229.
  GeneratorSpec spec;
  spec.model = Model::weibull_ph;
  spec.weibull_alpha = 1.5;
  spec.beta = {std::log(2.0)};
  spec.n = 2000;
  const auto r = size_power_experiment(spec, TestChoice::weibull_frailty, 0.05, 2000, 505, 1);
  CHECK(r.rejection_rate > 0.05);
  CHECK(r.rejection_rate < 0.09);
  CHECK(r.stat_variance == Approx(1.2331).margin(0.08));
}

TEST_CASE("null size of the poisson second-moment test") {
  GeneratorSpec spec;
  spec.model = Model::poisson;
  spec.beta = {std::log(2.0)};
  spec.n = 2000;
  const auto r = size_power_experiment(spec, TestChoice::poisson_secmom, 0.05, 1000, 1234, 1);
  CHECK(r.excluded == 0);
  CHECK(r.rejection_rate > 0.03);
  CHECK(r.rejection_rate < 0.07);
  CHECK(r.ks_distance_to_null < 0.05);
}

TEST_CASE("one-sidedness: the null statistic is negative half the time") {
  GeneratorSpec spec;
  spec.model = Model::poisson;
  spec.beta = {std::log(2.0)};
  spec.n = 5000;
  std::size_t nonpos = 0;
  const std::size_t reps = 5000;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto gen = generate(spec, 99, r);
    const auto& d = std::get<models::CountData>(gen.data);
    const auto fit = mle::fit_poisson(d);
    numerics::Vector beta(1);
    beta(0) = fit.estimates[0].second;
    if (models::poisson_second_moment(d, beta).statistic <= 0.0) {
      ++nonpos;
    }
  }
  const double frac = static_cast<double>(nonpos) / static_cast<double>(reps);
  CHECK(frac == Approx(0.5).margin(0.02));
}

TEST_CASE("U-distribution invariance under the null and local alternatives") {
  // Null data is literally identical across U choices (tested in test_rng).
  // Under a common moderate local alternative the rejection rates agree
  // within 0.03: the skewed centered-exponential F drifts away from the
  // symmetric choices as delta grows (the n^{-1/4} remainder at work), so
  // the comparison is pinned at delta1 = 0.5, n = 5000.
  const double delta = 0.5;
  GeneratorSpec spec;
  spec.model = Model::poisson;
  spec.beta = {std::log(2.0)};
  spec.n = 5000;
  spec.xi = delta * std::pow(5000.0, -0.25);
  spec.form = HetForm::multiplicative_exp;
  double rates[3];
  int idx = 0;
  for (auto u : {UDist::gaussian, UDist::rademacher, UDist::centered_exponential}) {
    spec.u_dist = u;
    rates[idx++] =
        size_power_experiment(spec, TestChoice::poisson_secmom, 0.05, 1500, 31415, 1)
            .rejection_rate;
  }
  CHECK(std::abs(rates[0] - rates[1]) < 0.03);
  CHECK(std::abs(rates[0] - rates[2]) < 0.03);
  CHECK(std::abs(rates[1] - rates[2]) < 0.03);
}

TEST_CASE("exponential frailty test has power against strong frailty") {
  // multiplicative lognormal frailty with Var(v) close to 0.5
  GeneratorSpec spec;
  spec.model = Model::exponential_ph;
  spec.beta = {std::log(2.0)};
  spec.n = 2000;
  spec.xi = 0.55;
  spec.u_dist = UDist::gaussian;
  spec.form = HetForm::multiplicative_exp;
  const auto r = size_power_experiment(spec, TestChoice::exp_frailty, 0.05, 400, 606, 1);
  CHECK(r.rejection_rate > 0.5);
}

TEST_CASE("panel mass at zero approaches one quarter for long panels") {
  // 40k-rep calibration: P(T = 0) is 0.289 at N = 200, 0.264 at N = 2000,
  // 0.255 at N = 8000, drifting toward the asymptotic 1/4 at the sqrt(N)
  // rate. Check the N = 2000 value against its measured band.
  GeneratorSpec spec;
  spec.model = Model::gaussian_panel;
  spec.n = 2000;
  spec.T = 5;
  const auto r = size_power_experiment(spec, TestChoice::gaussian_panel, 0.05, 2000, 707, 1);
  REQUIRE(r.mass_at_zero.has_value());
  CHECK(*r.mass_at_zero == Approx(0.264).margin(0.03));
}

TEST_CASE("lan diagnostic is exactly zero at delta1 = 0") {
  const auto pts = lan_diagnostic(0.0, {200, 400}, 50, 5, 2.0, 1);
  for (const auto& p : pts) {
    CHECK(p.median_abs_residual == 0.0);
  }
}

TEST_CASE("lan diagnostic residual shrinks with n") {
  const auto pts = lan_diagnostic(1.0, {500, 8000}, 300, 8, 2.0, 1);
  REQUIRE(pts.size() == 2);
  CHECK(pts[1].median_abs_residual < pts[0].median_abs_residual);
  // sample variance of S_xi,n near the analytic J_xixi = 2.5
  CHECK(pts[1].s_sample_variance ==
        Approx(pts[1].j_xixi).margin(3.0 * pts[1].s_variance_mc_se));
}

TEST_CASE("plugin diagnostic") {
  const auto forced = plugin_diagnostic({400}, 50, 3, 2.0, true, 1);
  CHECK(forced[0].median_abs_discrepancy == 0.0);

  const auto pts = plugin_diagnostic({500, 4000}, 300, 21, 2.0, false, 1);
  REQUIRE(pts.size() == 2);
  CHECK(pts[1].median_abs_discrepancy < pts[0].median_abs_discrepancy);
  // calibration runs observed ~0.005 at n = 4000; 0.15 is a loose ceiling
  CHECK(pts[1].median_abs_discrepancy < 0.15);
}

TEST_CASE("mismatched test choice and data model is rejected up front") {
  GeneratorSpec spec;
  spec.model = Model::poisson;
  CHECK_THROWS_AS(size_power_experiment(spec, TestChoice::exp_frailty, 0.05, 100, 1, 1),
                  std::domain_error);
  CHECK_THROWS_AS(size_power_experiment(spec, TestChoice::gaussian_panel, 0.05, 100, 1, 4),
                  std::domain_error);
}

TEST_CASE("fit failures are excluded and counted, never silently dropped") {
  // Constant panels make fit_gaussian_panel throw; with T=2, N=2 and tiny
  // variance that's hard to hit; instead force exclusions with all-zero
  // poisson counts at tiny n and lambda.
  GeneratorSpec spec;
  spec.model = Model::poisson;
  spec.beta = {std::log(0.05)}; // most replications give all-zero counts
  spec.n = 5;
  const auto r = size_power_experiment(spec, TestChoice::poisson_secmom, 0.05, 300, 7, 2);
  CHECK(r.excluded > 0);
  CHECK(r.reps == 300);
}
