#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <thread>

#include "calpha/io/csv.hpp"
#include "calpha/io/report.hpp"
#include "calpha/mle/fit.hpp"
#include "calpha/models/duration.hpp"
#include "calpha/models/gaussian_panel.hpp"
#include "calpha/models/poisson.hpp"
#include "calpha/sim/experiments.hpp"

namespace {

using namespace calpha;

int write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot open output file " << out_path << "\n";
    return 2;
  }
  out << text;
  return 0;
}

numerics::Vector beta_vector(const mle::FitResult& fit, Eigen::Index p) {
  numerics::Vector beta(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    beta(j) = fit.estimates[static_cast<std::size_t>(j)].second;
  }
  return beta;
}

core::TestReport run_named_test(const std::string& model, const models::ObservationSet& data,
                                double alpha) {
  if (model == "poisson-secmom" || model == "poisson-secfac") {
    const auto& d = std::get<models::CountData>(data);
    const auto fit = mle::fit_poisson(d);
    const auto beta = beta_vector(fit, d.X.cols());
    return model == "poisson-secmom" ? models::poisson_second_moment(d, beta, alpha)
                                     : models::poisson_second_factorial(d, beta, alpha);
  }
  if (model == "exp-frailty") {
    const auto& d = std::get<models::DurationData>(data);
    const auto fit = mle::fit_exponential_ph(d);
    return models::cox_exp_frailty(d, beta_vector(fit, d.X.cols()), alpha);
  }
  if (model == "weibull-frailty") {
    const auto& d = std::get<models::DurationData>(data);
    const auto fit = mle::fit_weibull_ph(d);
    return models::cox_weibull_frailty(d, beta_vector(fit, d.X.cols()), fit["alpha"], alpha);
  }
  if (model == "gaussian-panel") {
    const auto& d = std::get<models::PanelData>(data);
    const auto fit = mle::fit_gaussian_panel(d);
    return models::gaussian_panel_joint(d, fit["mu"], fit["sigma2"], alpha);
  }
  throw DataError("unknown model id '" + model + "'");
}

sim::TestChoice choice_from_model(const std::string& model) {
  if (model == "poisson-secmom") return sim::TestChoice::poisson_secmom;
  if (model == "poisson-secfac") return sim::TestChoice::poisson_secfac;
  if (model == "exp-frailty") return sim::TestChoice::exp_frailty;
  if (model == "weibull-frailty") return sim::TestChoice::weibull_frailty;
  if (model == "gaussian-panel") return sim::TestChoice::gaussian_panel;
  throw DataError("unknown model id '" + model + "'");
}

int capped_threads(int requested) {
  int threads = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) {
    threads = 1;
  }
  if (const char* cap = std::getenv("CALPHA_THREADS")) {
    const int c = std::atoi(cap);
    if (c >= 1 && threads > c) {
      threads = c;
    }
  }
  return threads;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neyman C(alpha) tests for unobserved parameter heterogeneity"};
  app.set_version_flag("--version", std::string("calpha ") + calpha::io::library_version);
  app.require_subcommand(1);

  const std::vector<std::string> model_ids = {"poisson-secmom", "poisson-secfac", "exp-frailty",
                                              "weibull-frailty", "gaussian-panel"};

  // ---- test ----
  auto* cmd_test = app.add_subcommand("test", "Run a heterogeneity test on a dataset");
  std::string t_model, t_data, t_format = "json", t_out;
  double t_alpha = 0.05;
  cmd_test->add_option("--model", t_model, "Test id")->required()->check(CLI::IsMember(model_ids));
  cmd_test->add_option("--data", t_data, "CSV dataset path")->required();
  cmd_test->add_option("--alpha", t_alpha, "Significance level")
      ->check(CLI::Range(1e-6, 0.499999));
  cmd_test->add_option("--format", t_format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd_test->add_option("--out", t_out, "Output path (default stdout)");

  // ---- simulate ----
  auto* cmd_sim = app.add_subcommand("simulate", "Seeded Monte Carlo size/power experiment");
  std::string s_model, s_format = "json", s_out, s_udist = "gaussian",
              s_form = "multiplicative-exp", s_cov = "none";
  double s_alpha = 0.05, s_xi = 0.0, s_xi2 = 0.0, s_lambda0 = 2.0, s_beta1 = 0.0, s_mu0 = 0.0,
         s_sigma0sq = 1.0, s_weibull_alpha = 1.0;
  std::size_t s_n = 0, s_N = 0, s_T = 5, s_reps = 1000;
  std::uint64_t s_seed = 0;
  bool s_seed_given = false;
  int s_threads = 0;
  cmd_sim->add_option("--model", s_model, "Test id")->required()->check(CLI::IsMember(model_ids));
  cmd_sim->add_option("--reps", s_reps, "Replications")->check(CLI::Range(100, 100000000));
  cmd_sim->add_option("--n", s_n, "Observations per replication");
  cmd_sim->add_option("--N", s_N, "Panel units (gaussian-panel)");
  cmd_sim->add_option("--T", s_T, "Panel periods (gaussian-panel)");
  auto* seed_opt = cmd_sim->add_option("--seed", s_seed, "Master seed");
  cmd_sim->add_option("--alpha", s_alpha, "Significance level")
      ->check(CLI::Range(1e-6, 0.499999));
  cmd_sim->add_option("--xi", s_xi, "Heterogeneity magnitude")->check(CLI::NonNegativeNumber);
  cmd_sim->add_option("--xi2", s_xi2, "Scale heterogeneity magnitude (panel)")
      ->check(CLI::NonNegativeNumber);
  cmd_sim->add_option("--u-dist", s_udist, "U distribution")
      ->check(CLI::IsMember({"gaussian", "rademacher", "centered-exponential"}));
  cmd_sim->add_option("--het-form", s_form, "Heterogeneity form")
      ->check(CLI::IsMember({"multiplicative-exp", "additive", "sqrt-scaled"}));
  cmd_sim->add_option("--covariates", s_cov, "Covariate scheme")
      ->check(CLI::IsMember({"none", "bernoulli", "uniform"}));
  cmd_sim->add_option("--lambda0", s_lambda0, "Base rate (count/duration models)")
      ->check(CLI::PositiveNumber);
  cmd_sim->add_option("--beta1", s_beta1, "Covariate coefficient");
  cmd_sim->add_option("--mu0", s_mu0, "Panel location truth");
  cmd_sim->add_option("--sigma0-sq", s_sigma0sq, "Panel variance truth")
      ->check(CLI::PositiveNumber);
  cmd_sim->add_option("--weibull-alpha", s_weibull_alpha, "Weibull shape truth")
      ->check(CLI::PositiveNumber);
  cmd_sim->add_option("--threads", s_threads, "Worker threads (capped by CALPHA_THREADS)");
  cmd_sim->add_option("--format", s_format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  cmd_sim->add_option("--out", s_out, "Output path (default stdout)");

  // ---- compare-im ----
  auto* cmd_im = app.add_subcommand("compare-im", "IM test vs C(alpha) equivalence check");
  std::string i_model, i_data, i_k = "identity", i_format = "json", i_out;
  cmd_im->add_option("--model", i_model, "Model family")
      ->required()
      ->check(CLI::IsMember({"poisson", "gaussian"}));
  cmd_im->add_option("--data", i_data, "CSV dataset path")->required();
  cmd_im->add_option("--k", i_k, "Heterogeneity spec k(.)")
      ->check(CLI::IsMember({"constant", "identity", "sqrt"}));
  cmd_im->add_option("--format", i_format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  cmd_im->add_option("--out", i_out, "Output path (default stdout)");

  // ---- predict-power ----
  auto* cmd_pow = app.add_subcommand("predict-power", "Analytic local power");
  double p_delta = 0.0, p_jresid = 1.0, p_alpha = 0.05;
  cmd_pow->add_option("--delta", p_delta, "Local alternative scale delta1")->required();
  cmd_pow->add_option("--j-resid", p_jresid, "Residual information")
      ->required()
      ->check(CLI::PositiveNumber);
  cmd_pow->add_option("--alpha", p_alpha, "Significance level")
      ->check(CLI::Range(1e-6, 0.499999));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_test) {
      const auto data = io::ingest(t_data, t_model);
      const auto report = run_named_test(t_model, data, t_alpha);
      return write_output(io::render_report(report, "test", std::nullopt, t_format), t_out);
    }

    if (*cmd_sim) {
      s_seed_given = seed_opt->count() > 0;
      if (!s_seed_given) {
        std::random_device rd;
        s_seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
      }
      const auto choice = choice_from_model(s_model);
      sim::GeneratorSpec spec;
      switch (choice) {
        case sim::TestChoice::poisson_secmom:
        case sim::TestChoice::poisson_secfac:
          spec.model = sim::Model::poisson;
          break;
        case sim::TestChoice::exp_frailty:
          spec.model = sim::Model::exponential_ph;
          break;
        case sim::TestChoice::weibull_frailty:
          spec.model = sim::Model::weibull_ph;
          spec.weibull_alpha = s_weibull_alpha;
          break;
        case sim::TestChoice::gaussian_panel:
          spec.model = sim::Model::gaussian_panel;
          break;
      }
      spec.mu0 = s_mu0;
      spec.sigma0_sq = s_sigma0sq;
      spec.xi = s_xi;
      spec.xi2 = s_xi2;
      spec.n = s_N > 0 ? s_N : (s_n > 0 ? s_n : 200);
      spec.T = s_T;
      if (s_udist == "gaussian") spec.u_dist = sim::UDist::gaussian;
      if (s_udist == "rademacher") spec.u_dist = sim::UDist::rademacher;
      if (s_udist == "centered-exponential") spec.u_dist = sim::UDist::centered_exponential;
      if (s_form == "multiplicative-exp") spec.form = sim::HetForm::multiplicative_exp;
      if (s_form == "additive") spec.form = sim::HetForm::additive;
      if (s_form == "sqrt-scaled") spec.form = sim::HetForm::sqrt_scaled;
      if (s_cov == "none") spec.covariates = sim::CovariateScheme::none;
      if (s_cov == "bernoulli") spec.covariates = sim::CovariateScheme::bernoulli;
      if (s_cov == "uniform") spec.covariates = sim::CovariateScheme::uniform;
      spec.beta = {std::log(s_lambda0)};
      if (spec.covariates != sim::CovariateScheme::none) {
        spec.beta.push_back(s_beta1);
      }
      const auto report = sim::size_power_experiment(spec, choice, s_alpha, s_reps, s_seed,
                                                     capped_threads(s_threads));
      return write_output(io::render_report(report, "simulate", s_seed, s_format), s_out);
    }

    if (*cmd_im) {
      im::HeterogeneitySpec spec = im::HeterogeneitySpec::identity;
      if (i_k == "constant") spec = im::HeterogeneitySpec::constant;
      if (i_k == "sqrt") spec = im::HeterogeneitySpec::sqrt_scale;
      im::EquivalenceReport report;
      if (i_model == "poisson") {
        const auto d = io::ingest_counts(i_data);
        const auto fit = mle::fit_poisson(d);
        report = im::check_equivalence(d, beta_vector(fit, d.X.cols()), spec);
      } else {
        const auto d = io::ingest_gaussian(i_data);
        const auto fit = mle::fit_gaussian_regression(d);
        report = im::check_equivalence(d, beta_vector(fit, d.X.cols()), spec);
      }
      return write_output(io::render_report(report, "compare-im", std::nullopt, i_format), i_out);
    }

    if (*cmd_pow) {
      const double power = sim::power_prediction(p_delta, p_jresid, p_alpha);
      nlohmann::json j;
      io::put_envelope(j, "predict-power", std::nullopt);
      io::put_number(j, "delta1", p_delta);
      io::put_number(j, "j_resid", p_jresid);
      io::put_number(j, "alpha", p_alpha);
      io::put_number(j, "power", power);
      return write_output(j.dump(2) + "\n", "");
    }
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
