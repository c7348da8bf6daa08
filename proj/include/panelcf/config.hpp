#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "panelcf/errors.hpp"
#include "panelcf/panel.hpp"

namespace panelcf {

// One batch run, fully described. Loaded from a JSON file; a few fields can
// then be overridden by environment variables (prefix PANELCF_, mirroring the
// command-line flags) and finally by the flags themselves, in that order of
// precedence: file < environment < flag.
struct RunConfig {
  std::string panel_path;
  CsvSchema schema;

  std::string treated_unit;
  int treatment_year = 0;
  // either a preset name or an explicit list; list wins when both given
  std::string donor_preset;
  std::vector<std::string> donor_list;
  std::string presets_file;

  std::vector<std::string> outcomes;
  std::vector<std::string> covariates;

  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out_dir = "out";

  // scm
  int scm_validation_split_year = 0;
  // parametric placebo
  long placebo_samples = 1000;
  // in-time placebo: backdated treatment year (0 = midpoint of the pre period)
  int placebo_backdate_to = 0;
  // structural break tests
  int trend_break_year = 0; // 0 = unknown-break search
  std::string za_mode = "both";
  // gsynth
  std::vector<int> gsynth_factor_range = {0, 1, 2, 3, 4, 5};
  long gsynth_n_boot = 500;
  // matrix completion
  double mc_lambda = 0.05;
  long mc_n_boot = 500;
  // lasso scm
  std::vector<double> lasso_lambda_grid;
  // sdid
  std::optional<double> sdid_regularization;
  // simulate
  int sim_units = 20;
  int sim_years = 40;
  int sim_factors = 2;
  double sim_noise_sd = 0.5;
  double sim_effect = -1.0;
  int sim_first_year = 1960;
  int sim_treatment_year = 1990;
  std::vector<double> sim_covariate_coefficients;
  // correlate / composite
  std::vector<std::pair<std::string, std::string>> correlate_pairs;
  bool composite_covariance = false;

  // canonical dump of the source document, for the manifest hash
  std::string canonical;
};

namespace detail {

inline void config_require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

} // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  using nlohmann::json;
  RunConfig c;
  detail::config_require(j.is_object(), "top level must be a JSON object");

  auto str = [&](const char* key, std::string& into, bool required = false) {
    if (j.contains(key)) {
      detail::config_require(j.at(key).is_string(), std::string(key) + " must be a string");
      into = j.at(key).get<std::string>();
    } else {
      detail::config_require(!required, std::string("missing required field '") + key + "'");
    }
  };
  auto strings = [&](const json& node, const char* what) {
    detail::config_require(node.is_array(), std::string(what) + " must be a list");
    std::vector<std::string> out;
    for (const auto& e : node) {
      detail::config_require(e.is_string(), std::string(what) + " entries must be strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  };

  str("panel", c.panel_path);
  if (j.contains("schema")) {
    const auto& s = j.at("schema");
    detail::config_require(s.is_object(), "schema must be an object");
    if (s.contains("delimiter")) {
      const auto d = s.at("delimiter").get<std::string>();
      detail::config_require(d.size() == 1, "schema.delimiter must be one character");
      c.schema.delimiter = d[0];
    }
    if (s.contains("unit")) c.schema.unit_column = s.at("unit").get<std::string>();
    if (s.contains("year")) c.schema.year_column = s.at("year").get<std::string>();
    if (s.contains("variable")) c.schema.variable_column = s.at("variable").get<std::string>();
    if (s.contains("value")) c.schema.value_column = s.at("value").get<std::string>();
  }

  str("treated_unit", c.treated_unit);
  if (j.contains("treatment_year")) c.treatment_year = j.at("treatment_year").get<int>();
  if (j.contains("donors")) {
    const auto& d = j.at("donors");
    if (d.is_string()) c.donor_preset = d.get<std::string>();
    else c.donor_list = strings(d, "donors");
  }
  str("presets_file", c.presets_file);
  if (j.contains("outcomes")) c.outcomes = strings(j.at("outcomes"), "outcomes");
  if (j.contains("covariates")) c.covariates = strings(j.at("covariates"), "covariates");
  if (j.contains("seed")) {
    detail::config_require(j.at("seed").is_number_unsigned(),
                           "seed must be a 64-bit unsigned integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("threads")) c.threads = j.at("threads").get<unsigned>();
  str("out", c.out_dir);

  if (j.contains("scm")) {
    const auto& s = j.at("scm");
    if (s.contains("validation_split_year"))
      c.scm_validation_split_year = s.at("validation_split_year").get<int>();
  }
  if (j.contains("placebo")) {
    const auto& s = j.at("placebo");
    if (s.contains("samples")) c.placebo_samples = s.at("samples").get<long>();
    if (s.contains("backdate_to")) c.placebo_backdate_to = s.at("backdate_to").get<int>();
  }
  if (j.contains("trend")) {
    const auto& s = j.at("trend");
    if (s.contains("break_year")) c.trend_break_year = s.at("break_year").get<int>();
    if (s.contains("mode")) {
      c.za_mode = s.at("mode").get<std::string>();
      detail::config_require(c.za_mode == "intercept" || c.za_mode == "trend" ||
                                 c.za_mode == "both",
                             "trend.mode must be intercept, trend, or both");
    }
  }
  if (j.contains("gsynth")) {
    const auto& s = j.at("gsynth");
    if (s.contains("factor_range")) {
      c.gsynth_factor_range.clear();
      for (const auto& e : s.at("factor_range"))
        c.gsynth_factor_range.push_back(e.get<int>());
    }
    if (s.contains("n_boot")) c.gsynth_n_boot = s.at("n_boot").get<long>();
  }
  if (j.contains("mc")) {
    const auto& s = j.at("mc");
    if (s.contains("lambda")) c.mc_lambda = s.at("lambda").get<double>();
    if (s.contains("n_boot")) c.mc_n_boot = s.at("n_boot").get<long>();
  }
  if (j.contains("lasso")) {
    const auto& s = j.at("lasso");
    if (s.contains("lambda_grid"))
      for (const auto& e : s.at("lambda_grid"))
        c.lasso_lambda_grid.push_back(e.get<double>());
  }
  if (j.contains("sdid")) {
    const auto& s = j.at("sdid");
    if (s.contains("regularization") && !s.at("regularization").is_null())
      c.sdid_regularization = s.at("regularization").get<double>();
  }
  if (j.contains("simulate")) {
    const auto& s = j.at("simulate");
    if (s.contains("units")) c.sim_units = s.at("units").get<int>();
    if (s.contains("years")) c.sim_years = s.at("years").get<int>();
    if (s.contains("factors")) c.sim_factors = s.at("factors").get<int>();
    if (s.contains("noise_sd")) c.sim_noise_sd = s.at("noise_sd").get<double>();
    if (s.contains("effect")) c.sim_effect = s.at("effect").get<double>();
    if (s.contains("first_year")) c.sim_first_year = s.at("first_year").get<int>();
    if (s.contains("treatment_year"))
      c.sim_treatment_year = s.at("treatment_year").get<int>();
    if (s.contains("covariate_coefficients"))
      for (const auto& e : s.at("covariate_coefficients"))
        c.sim_covariate_coefficients.push_back(e.get<double>());
  }
  if (j.contains("correlate")) {
    const auto& s = j.at("correlate");
    if (s.contains("pairs"))
      for (const auto& e : s.at("pairs")) {
        detail::config_require(e.is_array() && e.size() == 2,
                               "correlate.pairs entries must be 2-element lists");
        c.correlate_pairs.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
      }
    if (s.contains("covariance_pca"))
      c.composite_covariance = s.at("covariance_pca").get<bool>();
  }

  c.canonical = j.dump();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad JSON in '") + path + "': " + e.what());
  }
  try {
    return parse_config(j);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid value in '") + path + "': " + e.what());
  }
}

// Environment overrides, applied between the config file and the flags.
// PANELCF_SEED, PANELCF_THREADS, PANELCF_OUT, PANELCF_OUTCOME (comma
// separated list replacing outcomes[]).
inline void apply_env_overrides(RunConfig& c) {
  if (const char* v = std::getenv("PANELCF_SEED")) {
    char* end = nullptr;
    const unsigned long long s = std::strtoull(v, &end, 10);
    if (end == v || *end != '\0') throw ConfigError("PANELCF_SEED is not an unsigned integer");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (const char* v = std::getenv("PANELCF_THREADS")) {
    char* end = nullptr;
    const unsigned long t = std::strtoul(v, &end, 10);
    if (!end || *end != '\0' || t == 0) throw ConfigError("PANELCF_THREADS must be a positive integer");
    c.threads = static_cast<unsigned>(t);
  }
  if (const char* v = std::getenv("PANELCF_OUT")) c.out_dir = v;
  if (const char* v = std::getenv("PANELCF_OUTCOME")) {
    c.outcomes.clear();
    std::string cur;
    for (const char* p = v;; ++p) {
      if (*p == ',' || *p == '\0') {
        if (!cur.empty()) c.outcomes.push_back(cur);
        cur.clear();
        if (*p == '\0') break;
      } else {
        cur += *p;
      }
    }
  }
}

} // namespace panelcf
