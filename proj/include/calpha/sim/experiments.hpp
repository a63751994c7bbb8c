#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "calpha/mle/fit.hpp"
#include "calpha/models/duration.hpp"
#include "calpha/models/gaussian_panel.hpp"
#include "calpha/models/poisson.hpp"
#include "calpha/sim/generate.hpp"

// Seeded Monte Carlo experiments: size/power campaigns, the LAN-expansion
// diagnostic and the plug-in robustness diagnostic. Replications are
// embarrassingly parallel; every per-replication quantity is a pure function
// of (master_seed, replication), results land in slots indexed by
// replication and are aggregated in a fixed order, so reports are
// bit-identical under any thread count.

namespace calpha::sim {

enum class TestChoice {
  poisson_secmom,
  poisson_secfac,
  exp_frailty,
  weibull_frailty,
  gaussian_panel
};

inline std::string to_string(TestChoice t) {
  switch (t) {
    case TestChoice::poisson_secmom: return "poisson-secmom";
    case TestChoice::poisson_secfac: return "poisson-secfac";
    case TestChoice::exp_frailty: return "exp-frailty";
    case TestChoice::weibull_frailty: return "weibull-frailty";
    case TestChoice::gaussian_panel: return "gaussian-panel";
  }
  return "?";
}

struct SimulationReport {
  std::string test_name;
  std::string model;
  std::size_t reps = 0;
  std::size_t excluded = 0; // replications whose fit failed, never imputed
  std::size_t n = 0;
  double alpha = 0.05;
  double rejection_rate = 0.0;
  double rejection_se = 0.0;
  double stat_mean = 0.0;
  double stat_variance = 0.0;
  double stat_skewness = 0.0;
  double ks_distance_to_null = 0.0;
  std::optional<double> mass_at_zero; // mixture-valued statistics only
  std::size_t resampled_draws = 0;
  std::uint64_t master_seed = 0;
  std::string per_rep_seed_rule = seed_rule_description;
};

namespace detail {

struct RepOutcome {
  double statistic = 0.0;
  bool reject = false;
  bool excluded = false;
  std::size_t resampled = 0;
};

inline core::TestReport run_choice(TestChoice choice, const models::ObservationSet& data,
                                   double alpha) {
  switch (choice) {
    case TestChoice::poisson_secmom: {
      const auto& d = std::get<models::CountData>(data);
      const auto fit = mle::fit_poisson(d);
      numerics::Vector beta(d.X.cols());
      for (Eigen::Index j = 0; j < beta.size(); ++j) {
        beta(j) = fit.estimates[static_cast<std::size_t>(j)].second;
      }
      return models::poisson_second_moment(d, beta, alpha);
    }
    case TestChoice::poisson_secfac: {
      const auto& d = std::get<models::CountData>(data);
      const auto fit = mle::fit_poisson(d);
      numerics::Vector beta(d.X.cols());
      for (Eigen::Index j = 0; j < beta.size(); ++j) {
        beta(j) = fit.estimates[static_cast<std::size_t>(j)].second;
      }
      return models::poisson_second_factorial(d, beta, alpha);
    }
    case TestChoice::exp_frailty: {
      const auto& d = std::get<models::DurationData>(data);
      const auto fit = mle::fit_exponential_ph(d);
      numerics::Vector beta(d.X.cols());
      for (Eigen::Index j = 0; j < beta.size(); ++j) {
        beta(j) = fit.estimates[static_cast<std::size_t>(j)].second;
      }
      return models::cox_exp_frailty(d, beta, alpha);
    }
    case TestChoice::weibull_frailty: {
      const auto& d = std::get<models::DurationData>(data);
      const auto fit = mle::fit_weibull_ph(d);
      numerics::Vector beta(d.X.cols());
      for (Eigen::Index j = 0; j < beta.size(); ++j) {
        beta(j) = fit.estimates[static_cast<std::size_t>(j)].second;
      }
      return models::cox_weibull_frailty(d, beta, fit["alpha"], alpha);
    }
    case TestChoice::gaussian_panel: {
      const auto& d = std::get<models::PanelData>(data);
      const auto fit = mle::fit_gaussian_panel(d);
      return models::gaussian_panel_joint(d, fit["mu"], fit["sigma2"], alpha);
    }
  }
  throw std::domain_error("unknown test choice");
}

template <typename Work>
void parallel_for_reps(std::size_t reps, int threads, Work work) {
  const int nthreads = std::max(1, threads);
  if (nthreads == 1) {
    for (std::size_t r = 0; r < reps; ++r) {
      work(r);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nthreads));
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t r = next.fetch_add(1);
        if (r >= reps || failed.load()) {
          return;
        }
        try {
          work(r);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) {
            first_error = std::current_exception();
          }
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& th : pool) {
    th.join();
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }
}

// Kolmogorov distance between the empirical CDF and a null CDF that may
// carry an atom at zero. Tied sample values form one empirical jump, and the
// lower comparison at the atom uses the left limit of the null CDF.
inline double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf,
                          double atom_at_zero = 0.0) {
  std::sort(sample.begin(), sample.end());
  const double m = static_cast<double>(sample.size());
  double ks = 0.0;
  std::size_t i = 0;
  while (i < sample.size()) {
    std::size_t j = i;
    while (j < sample.size() && sample[j] == sample[i]) {
      ++j;
    }
    const double f = cdf(sample[i]);
    const double f_left = sample[i] == 0.0 ? f - atom_at_zero : f;
    ks = std::max(ks, std::abs(static_cast<double>(j) / m - f));
    ks = std::max(ks, std::abs(static_cast<double>(i) / m - f_left));
    i = j;
  }
  return ks;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

} // namespace detail

/// Analytic local power from the shifted-normal limit:
/// 1 - Phi(Phi^{-1}(1 - alpha) - delta1^2 sqrt(J_resid)).
inline double power_prediction(double delta1, double j_resid, double alpha) {
  if (!(j_resid > 0.0)) {
    throw std::domain_error("power_prediction: residual information must be positive");
  }
  const double shift = delta1 * delta1 * std::sqrt(j_resid);
  return 1.0 - numerics::normal_cdf(numerics::normal_quantile(1.0 - alpha) - shift);
}

namespace detail {

inline Model model_for(TestChoice choice) {
  switch (choice) {
    case TestChoice::poisson_secmom:
    case TestChoice::poisson_secfac:
      return Model::poisson;
    case TestChoice::exp_frailty:
      return Model::exponential_ph;
    case TestChoice::weibull_frailty:
      return Model::weibull_ph;
    case TestChoice::gaussian_panel:
      return Model::gaussian_panel;
  }
  throw std::domain_error("unknown test choice");
}

} // namespace detail

/// Run generate -> fit -> test over seeded replications and aggregate.
inline SimulationReport size_power_experiment(const GeneratorSpec& spec, TestChoice choice,
                                              double alpha, std::size_t reps,
                                              std::uint64_t master_seed, int threads = 1) {
  if (reps < 100) {
    throw std::domain_error("size_power_experiment: need reps >= 100");
  }
  if (spec.model != detail::model_for(choice)) {
    throw std::domain_error("size_power_experiment: test choice does not match the data model");
  }
  spec.validate();
  std::vector<detail::RepOutcome> outcomes(reps);
  detail::parallel_for_reps(reps, threads, [&](std::size_t r) {
    detail::RepOutcome& o = outcomes[r];
    try {
      GeneratedData gen = generate(spec, master_seed, r);
      o.resampled = gen.resampled;
      const core::TestReport rep = detail::run_choice(choice, gen.data, alpha);
      o.statistic = rep.statistic;
      o.reject = rep.reject;
    } catch (const ConvergenceError&) {
      o.excluded = true;
    } catch (const DataError&) {
      o.excluded = true;
    } catch (const SingularityError&) {
      o.excluded = true;
    }
  });

  SimulationReport report;
  report.test_name = to_string(choice);
  report.model = to_string(spec.model);
  report.reps = reps;
  report.n = spec.n;
  report.alpha = alpha;
  report.master_seed = master_seed;

  std::vector<double> stats;
  stats.reserve(reps);
  std::size_t rejected = 0;
  for (const auto& o : outcomes) {
    report.resampled_draws += o.resampled;
    if (o.excluded) {
      ++report.excluded;
      continue;
    }
    stats.push_back(o.statistic);
    rejected += o.reject ? 1 : 0;
  }
  const double m = static_cast<double>(stats.size());
  if (m == 0.0) {
    throw ConvergenceError("size_power_experiment: every replication failed to fit");
  }
  report.rejection_rate = static_cast<double>(rejected) / m;
  report.rejection_se = std::sqrt(report.rejection_rate * (1.0 - report.rejection_rate) / m);

  double mean = 0.0;
  for (double s : stats) mean += s;
  mean /= m;
  double m2 = 0.0, m3 = 0.0;
  for (double s : stats) {
    const double d = s - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= m;
  m3 /= m;
  report.stat_mean = mean;
  report.stat_variance = m2 * m / (m - 1.0);
  report.stat_skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;

  if (choice == TestChoice::gaussian_panel) {
    std::size_t zeros = 0;
    for (double s : stats) zeros += s == 0.0 ? 1 : 0;
    report.mass_at_zero = static_cast<double>(zeros) / m;
    const auto mix = core::diag_weights(2);
    report.ks_distance_to_null = detail::ks_distance(
        stats, [&](double x) { return mix.cdf(std::max(0.0, x)); }, mix.mass_at_zero());
  } else {
    report.ks_distance_to_null =
        detail::ks_distance(stats, [](double x) { return numerics::normal_cdf(x); });
  }
  return report;
}

struct LanPoint {
  std::size_t n = 0;
  double xi_n = 0.0;               // delta1 * n^{-1/4}
  double median_abs_residual = 0.0; // median |Lambda_n - (t'S_n - t'Jt/2)|
  double s_sample_variance = 0.0;   // across replications
  double j_xixi = 0.0;              // analytic (lambda0 + 2 lambda0^2) / 4
  double s_variance_mc_se = 0.0;
};

/// LAN diagnostic for the Poisson intercept-only model with Rademacher U:
/// the two-point mixture makes the exact log-likelihood ratio computable,
/// and the quadratic approximation uses t = delta1^2 with the second-order
/// score S_xi,n.
inline std::vector<LanPoint> lan_diagnostic(double delta1, const std::vector<std::size_t>& n_grid,
                                            std::size_t reps, std::uint64_t master_seed,
                                            double lambda0 = 2.0, int threads = 1) {
  if (!(lambda0 > 0.0)) {
    throw std::domain_error("lan_diagnostic: lambda0 must be positive");
  }
  std::vector<LanPoint> points;
  points.reserve(n_grid.size());
  const double j_xixi = (lambda0 + 2.0 * lambda0 * lambda0) / 4.0;
  std::uint64_t grid_index = 0;
  for (const std::size_t n : n_grid) {
    const double xi_n = delta1 * std::pow(static_cast<double>(n), -0.25);
    const double lam_up = lambda0 * std::exp(xi_n);
    const double lam_dn = lambda0 * std::exp(-xi_n);
    std::vector<double> residuals(reps);
    std::vector<double> s_values(reps);
    // distinct replication ids per grid point keep the draws independent
    const std::uint64_t rep_offset = grid_index * 1000003ull;
    detail::parallel_for_reps(reps, threads, [&](std::size_t r) {
      CounterRng rng(master_seed, rep_offset + r, detail::stream_obs);
      double log_ratio = 0.0;
      double s_sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double y = static_cast<double>(rng.poisson(lambda0));
        const double lgy = numerics::log_gamma(y + 1.0);
        const double l0 = y * std::log(lambda0) - lambda0 - lgy;
        const double lu = y * std::log(lam_up) - lam_up - lgy;
        const double ld = y * std::log(lam_dn) - lam_dn - lgy;
        // log(0.5 e^{lu} + 0.5 e^{ld}) by log-sum-exp
        const double hi = std::max(lu, ld);
        log_ratio += hi + std::log(0.5 * std::exp(lu - hi) + 0.5 * std::exp(ld - hi)) - l0;
        s_sum += (y - lambda0) * (y - lambda0) - lambda0;
      }
      const double s_n = s_sum / (2.0 * std::sqrt(static_cast<double>(n)));
      const double t = delta1 * delta1;
      const double approx = t * s_n - 0.5 * t * t * j_xixi;
      residuals[r] = std::abs(log_ratio - approx);
      s_values[r] = s_n;
    });
    LanPoint p;
    p.n = n;
    p.xi_n = xi_n;
    p.median_abs_residual = detail::median(residuals);
    double mean = 0.0;
    for (double s : s_values) mean += s;
    mean /= static_cast<double>(reps);
    double var = 0.0, m4 = 0.0;
    for (double s : s_values) {
      const double d = s - mean;
      var += d * d;
      m4 += d * d * d * d;
    }
    var /= static_cast<double>(reps) - 1.0;
    m4 /= static_cast<double>(reps);
    p.s_sample_variance = var;
    p.j_xixi = j_xixi;
    // MC standard error of the sample variance from the fourth moment
    p.s_variance_mc_se = std::sqrt(std::max(0.0, m4 - var * var) / static_cast<double>(reps));
    points.push_back(p);
    ++grid_index;
  }
  return points;
}

struct PluginPoint {
  std::size_t n = 0;
  double median_abs_discrepancy = 0.0; // median |Z_n(theta_hat) - Z_n(theta_0)|
};

/// Plug-in robustness of the Poisson second-moment statistic: compare the
/// MLE-plug-in Z with the fully residualized statistic at the generating
/// parameter.
inline std::vector<PluginPoint> plugin_diagnostic(const std::vector<std::size_t>& n_grid,
                                                  std::size_t reps, std::uint64_t master_seed,
                                                  double lambda0 = 2.0,
                                                  bool force_true_theta = false,
                                                  int threads = 1) {
  std::vector<PluginPoint> points;
  points.reserve(n_grid.size());
  std::uint64_t grid_index = 0;
  for (const std::size_t n : n_grid) {
    std::vector<double> discrepancies(reps);
    const std::uint64_t rep_offset = grid_index * 1000003ull;
    detail::parallel_for_reps(reps, threads, [&](std::size_t r) {
      GeneratorSpec spec;
      spec.model = Model::poisson;
      spec.beta = {std::log(lambda0)};
      spec.n = n;
      spec.xi = 0.0;
      GeneratedData gen = generate(spec, master_seed, rep_offset + r);
      const auto& d = std::get<models::CountData>(gen.data);
      // Z at the true theta: residualized score with lambda_0 known.
      double num0 = 0.0;
      for (Eigen::Index i = 0; i < d.y.size(); ++i) {
        const double dev = d.y(i) - lambda0;
        num0 += dev * dev - lambda0 - dev;
      }
      const double z_true =
          num0 / std::sqrt(2.0 * static_cast<double>(n) * lambda0 * lambda0);
      double z_hat = z_true;
      if (!force_true_theta) {
        const auto fit = mle::fit_poisson(d);
        numerics::Vector beta(1);
        beta(0) = fit.estimates[0].second;
        z_hat = models::poisson_second_moment(d, beta).statistic;
      }
      discrepancies[r] = std::abs(z_hat - z_true);
    });
    PluginPoint p;
    p.n = n;
    p.median_abs_discrepancy = detail::median(discrepancies);
    points.push_back(p);
    ++grid_index;
  }
  return points;
}

} // namespace calpha::sim
