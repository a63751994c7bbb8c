#pragma once

#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>

#include "calpha/core/test_report.hpp"
#include "calpha/im/im_test.hpp"
#include "calpha/sim/experiments.hpp"

// Machine-readable reports. JSON objects are emitted with sorted keys and
// shortest round-trip doubles, so identical inputs serialize to identical
// bytes; schema version calpha-report/1.

namespace calpha::io {

inline constexpr const char* report_schema = "calpha-report/1";
inline constexpr const char* library_version = "1.0.0";

// Every numeric field is finite or explicitly null with a reason code.
inline void put_number(nlohmann::json& j, const std::string& key, double value) {
  if (std::isfinite(value)) {
    j[key] = value;
  } else {
    j[key] = nullptr;
    j[key + "_reason"] = "non-finite";
  }
}

inline void put_envelope(nlohmann::json& j, const std::string& command,
                         const std::optional<std::uint64_t>& seed) {
  j["schema"] = report_schema;
  j["version"] = library_version;
  j["command"] = command;
  if (seed.has_value()) {
    j["seed"] = *seed;
  } else {
    j["seed"] = nullptr;
  }
}

inline nlohmann::json to_json(const core::TestReport& r) {
  nlohmann::json j;
  j["test"] = r.test_name;
  j["n"] = r.n;
  put_number(j, "statistic", r.statistic);
  put_number(j, "p_value", r.p_value);
  put_number(j, "alpha", r.alpha);
  put_number(j, "critical_value", r.critical_value);
  j["reject"] = r.reject;
  if (r.components.has_value()) {
    put_number(j, "t1n", (*r.components)[0]);
    put_number(j, "t2n", (*r.components)[1]);
  }
  if (r.null_kind == core::NullKind::standard_normal) {
    j["null_distribution"] = {{"type", "standard-normal"}};
  } else {
    nlohmann::json mix;
    mix["type"] = "chi-bar-squared";
    auto weights = nlohmann::json::array();
    auto dfs = nlohmann::json::array();
    for (const auto& c : r.mixture->components()) {
      weights.push_back(c.weight);
      dfs.push_back(c.df);
    }
    mix["weights"] = weights;
    mix["dfs"] = dfs;
    j["null_distribution"] = mix;
  }
  nlohmann::json est;
  for (const auto& [name, value] : r.nuisance_estimates) {
    put_number(est, name, value);
  }
  j["nuisance_estimates"] = est;
  j["warnings"] = r.warnings;
  return j;
}

inline nlohmann::json to_json(const sim::SimulationReport& r) {
  nlohmann::json j;
  j["test"] = r.test_name;
  j["model"] = r.model;
  j["reps"] = r.reps;
  j["excluded"] = r.excluded;
  j["n"] = r.n;
  put_number(j, "alpha", r.alpha);
  put_number(j, "rejection_rate", r.rejection_rate);
  put_number(j, "rejection_se", r.rejection_se);
  put_number(j, "stat_mean", r.stat_mean);
  put_number(j, "stat_variance", r.stat_variance);
  put_number(j, "stat_skewness", r.stat_skewness);
  put_number(j, "ks_distance_to_null", r.ks_distance_to_null);
  if (r.mass_at_zero.has_value()) {
    put_number(j, "mass_at_zero", *r.mass_at_zero);
  } else {
    j["mass_at_zero"] = nullptr;
    j["mass_at_zero_reason"] = "scalar statistic";
  }
  j["resampled_draws"] = r.resampled_draws;
  j["master_seed"] = r.master_seed;
  j["per_rep_seed_rule"] = r.per_rep_seed_rule;
  return j;
}

inline nlohmann::json to_json(const im::EquivalenceReport& r) {
  nlohmann::json j;
  put_number(j, "im_value", r.im_value);
  put_number(j, "calpha_value", r.calpha_value);
  put_number(j, "abs_diff", r.abs_diff);
  put_number(j, "identity1_residual", r.identity1_residual);
  put_number(j, "identity2_residual", r.identity2_residual);
  j["equivalent"] = r.equivalent;
  return j;
}

template <typename Report>
std::string render_json(const Report& r, const std::string& command,
                        std::optional<std::uint64_t> seed) {
  nlohmann::json j = to_json(r);
  put_envelope(j, command, seed);
  return j.dump(2) + "\n";
}

/// Flat key,value rendering for CSV output.
inline std::string render_csv(const nlohmann::json& j, const std::string& prefix = "") {
  std::ostringstream out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      out << render_csv(*it, key);
    } else if (it->is_array()) {
      std::size_t idx = 0;
      for (const auto& el : *it) {
        out << key << "[" << idx++ << "]," << el.dump() << "\n";
      }
    } else {
      out << key << "," << it->dump() << "\n";
    }
  }
  return out.str();
}

template <typename Report>
std::string render_report(const Report& r, const std::string& command,
                          std::optional<std::uint64_t> seed, const std::string& format) {
  if (format == "csv") {
    nlohmann::json j = to_json(r);
    put_envelope(j, command, seed);
    return render_csv(j);
  }
  return render_json(r, command, seed);
}

} // namespace calpha::io
