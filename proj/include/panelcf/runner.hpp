#pragma once

#include <cstdio>
#include <ctime>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "panelcf/config.hpp"
#include "panelcf/did.hpp"
#include "panelcf/emit.hpp"
#include "panelcf/factor_sim.hpp"
#include "panelcf/gsynth.hpp"
#include "panelcf/inference.hpp"
#include "panelcf/lasso_scm.hpp"
#include "panelcf/matrix_completion.hpp"
#include "panelcf/presets.hpp"
#include "panelcf/report.hpp"
#include "panelcf/scm.hpp"
#include "panelcf/sdid.hpp"
#include "panelcf/version.hpp"

namespace panelcf {

// Exit codes for the batch front door.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1; // config / input problems
inline constexpr int kExitEstimation = 2; // an estimator failed on valid input

namespace detail {

inline std::string iso_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_run_manifest(Emitter& em, const RunConfig& c,
                               const std::string& subcommand) {
  std::map<std::string, std::string> m;
  m["subcommand"] = subcommand;
  m["config_hash"] = hex64(fnv1a64(c.canonical));
  m["seed"] = std::to_string(c.seed);
  m["versions"] = version_block();
  if (!c.panel_path.empty()) m["panel"] = c.panel_path;
  em.write_manifest(m);
  em.write_timestamp(iso_now());
}

inline TreatmentSpec treatment_from_config(const PanelDataset& p, const RunConfig& c) {
  if (c.treated_unit.empty())
    throw ConfigError("treated_unit is required for this subcommand");
  if (!c.donor_list.empty())
    return make_treatment(p, c.treated_unit, c.treatment_year, c.donor_list);
  if (!c.donor_preset.empty()) {
    std::map<std::string, std::vector<std::string>> extra;
    if (!c.presets_file.empty()) extra = load_presets_file(c.presets_file);
    return restrict_donors(p, c.donor_preset, c.treated_unit, c.treatment_year, extra);
  }
  std::vector<std::string> pool; // default: everyone else
  for (const auto& u : p.units())
    if (u != c.treated_unit) pool.push_back(u);
  return make_treatment(p, c.treated_unit, c.treatment_year, pool);
}

inline ScmOptions scm_options(const RunConfig& c) {
  ScmOptions o;
  o.covariates = c.covariates;
  o.validation_split_year = c.scm_validation_split_year;
  o.threads = c.threads;
  return o;
}

inline void check_variables_exist(const PanelDataset& p, const RunConfig& c,
                                  bool need_outcome = true) {
  if (need_outcome && c.outcomes.empty())
    throw ConfigError("no outcomes configured (outcomes[] or --outcome)");
  for (const auto& v : c.outcomes)
    if (!p.has_variable(v)) throw UnknownVariable("run", v);
  for (const auto& v : c.covariates)
    if (!p.has_variable(v)) throw UnknownVariable("run", v);
}

// ---- per-subcommand emitters -----------------------------------------------

inline void emit_scm(Emitter& em, const PanelDataset& p, const TreatmentSpec& t,
                     const RunConfig& c, const std::string& oc) {
  const ScmFit fit = fit_synthetic_control(p, t, oc, scm_options(c));
  std::vector<std::vector<std::string>> wrows;
  for (std::size_t i = 0; i < fit.weights.units.size(); ++i)
    wrows.push_back({fit.weights.units[i],
                     Emitter::cell(fit.weights.w(static_cast<Eigen::Index>(i)))});
  em.write_table(oc + "_scm_weights", {"donor", "weight"}, wrows,
                 {{"intercept", Emitter::cell(fit.weights.intercept)},
                  {"convex", fit.weights.convex ? "true" : "false"},
                  {"non_unique", fit.weights.non_unique ? "true" : "false"},
                  {"objective", Emitter::cell(fit.objective)},
                  {"pre_rmse", Emitter::cell(fit.pre_rmse)},
                  {"post_rmse", Emitter::cell(fit.post_rmse)},
                  {"predictor_rule", fit.predictor_weights.rule},
                  {"validation_loss", Emitter::cell(fit.predictor_weights.validation_loss)},
                  {"method", "scm"}});
  std::vector<std::vector<std::string>> vrows;
  for (std::size_t i = 0; i < fit.predictor_weights.labels.size(); ++i)
    vrows.push_back({fit.predictor_weights.labels[i],
                     Emitter::cell(fit.predictor_weights.v(static_cast<Eigen::Index>(i)))});
  em.write_table(oc + "_scm_predictor_weights", {"predictor", "weight"}, vrows,
                 {{"rule", fit.predictor_weights.rule}});
  std::vector<std::vector<std::string>> prows;
  for (int i = 0; i < fit.actual.size(); ++i)
    prows.push_back({Emitter::cell(fit.actual.year_at(i)),
                     Emitter::cell(fit.actual.values[static_cast<std::size_t>(i)]),
                     Emitter::cell(fit.counterfactual.values[static_cast<std::size_t>(i)]),
                     Emitter::cell(fit.gaps.values.values[static_cast<std::size_t>(i)])});
  em.write_table(oc + "_scm_path", {"year", "actual", "counterfactual", "gap"}, prows,
                 {{"treated_unit", t.treated_unit},
                  {"treatment_year", Emitter::cell(t.treatment_year)},
                  {"outcome", oc}});
}

inline void emit_did(Emitter& em, const PanelDataset& p, const TreatmentSpec& t,
                     const RunConfig& c, const std::string& oc) {
  const DidEstimate st = fit_twfe_did(p, t, oc, c.covariates);
  const DidEstimate dy = fit_dynamic_did(p, t, oc, c.covariates);
  auto row = [](const DidEstimate& d) {
    return std::vector<std::string>{d.spec, Emitter::cell(d.effect),
                                    Emitter::cell(d.standard_error),
                                    Emitter::cell(d.ci95.first),
                                    Emitter::cell(d.ci95.second),
                                    Emitter::cell(d.nobs),
                                    Emitter::cell(d.within_r2)};
  };
  em.write_table(oc + "_did",
                 {"spec", "estimate", "standard_error", "ci_low", "ci_high", "nobs",
                  "within_r2"},
                 {row(st), row(dy)},
                 {{"static_notes", st.notes}, {"dynamic_notes", dy.notes},
                  {"outcome", oc}});
}

inline void emit_event_study(Emitter& em, const PanelDataset& p, const TreatmentSpec& t,
                             const RunConfig& c, const std::string& oc) {
  const std::pair<int, int> window{p.first_year() - t.treatment_year,
                                   p.last_year() - t.treatment_year};
  const EventStudyResult es = event_study(p, t, oc, c.covariates, window);
  std::vector<std::vector<std::string>> rows;
  for (const auto& [rel, coef] : es.coefficients)
    rows.push_back({Emitter::cell(rel), Emitter::cell(coef.estimate),
                    Emitter::cell(coef.standard_error)});
  em.write_table(oc + "_event_study", {"relative_year", "estimate", "standard_error"},
                 rows,
                 {{"reference_year", Emitter::cell(es.reference_year)},
                  {"nobs", Emitter::cell(es.nobs)},
                  {"outcome", oc}});
}

inline void emit_placebo_space(Emitter& em, const PanelDataset& p,
                               const TreatmentSpec& t, const RunConfig& c,
                               const std::string& oc) {
  const PlaceboDistribution dist = in_space_placebo(p, t, oc, scm_options(c));
  std::vector<std::vector<std::string>> rows;
  std::vector<LongRow> gap_rows;
  for (const auto& [unit, u] : dist.per_unit) {
    rows.push_back({unit, Emitter::cell(u.pre_rmse), Emitter::cell(u.post_rmse),
                    Emitter::cell(u.rmse_ratio), u.degenerate ? "true" : "false",
                    u.failed ? "true" : "false", u.failure});
    if (!u.failed)
      for (int i = 0; i < u.gaps.values.size(); ++i)
        gap_rows.push_back({unit, u.gaps.values.year_at(i), "gap",
                            u.gaps.values.values[static_cast<std::size_t>(i)]});
  }
  const double pval = placebo_p_value(dist);
  em.write_table(oc + "_placebo_units",
                 {"unit", "pre_rmse", "post_rmse", "rmse_ratio", "degenerate",
                  "failed", "failure"},
                 rows,
                 {{"p_value", Emitter::cell(pval)},
                  {"treated_unit", dist.treated_unit},
                  {"treatment_year", Emitter::cell(dist.treatment_year)},
                  {"outcome", oc}});
  if (!gap_rows.empty())
    em.write_panel(oc + "_placebo_gaps",
                   PanelDataset::from_rows(gap_rows, "emit_placebo_gaps"),
                   {{"outcome", oc}});
  std::vector<std::vector<std::string>> prow;
  for (const auto& [k, pv] : placebo_p_value_path(dist))
    prow.push_back({Emitter::cell(k), Emitter::cell(pv)});
  em.write_table(oc + "_placebo_p_path", {"post_years", "p_value"}, prow,
                 {{"outcome", oc}});
}

inline void emit_placebo_param(Emitter& em, const PanelDataset& p,
                               const TreatmentSpec& t, const RunConfig& c,
                               const std::string& oc) {
  const ParametricPlaceboResult r =
      parametric_placebo_did(p, t, oc, c.placebo_samples, c.seed, scm_options(c));
  em.write_table(
      oc + "_placebo_param",
      {"estimate", "standard_error", "sampling_p_value", "sampling_sd", "n_samples",
       "ks_statistic", "ks_p_value", "ks_exact"},
      {{Emitter::cell(r.estimate.effect), Emitter::cell(r.estimate.standard_error),
        Emitter::cell(r.sampling_p_value), Emitter::cell(r.sampling_sd),
        Emitter::cell(r.n_samples), Emitter::cell(r.ks.statistic),
        Emitter::cell(r.ks.p_value), r.ks.exact ? "true" : "false"}},
      {{"notes", r.estimate.notes}, {"outcome", oc},
       {"seed", std::to_string(c.seed)}});
}

inline void emit_placebo_time(Emitter& em, const PanelDataset& p,
                              const TreatmentSpec& t, const RunConfig& c,
                              const std::string& oc) {
  int year = c.placebo_backdate_to;
  if (year == 0) {
    year = p.first_year() + (t.treatment_year - p.first_year()) / 2;
    if (year - p.first_year() < 2) year = p.first_year() + 2;
  }
  const ScmFit fit = in_time_placebo(p, t, oc, year, scm_options(c));
  std::vector<std::vector<std::string>> prows;
  for (int i = 0; i < fit.actual.size(); ++i)
    prows.push_back({Emitter::cell(fit.actual.year_at(i)),
                     Emitter::cell(fit.actual.values[static_cast<std::size_t>(i)]),
                     Emitter::cell(fit.counterfactual.values[static_cast<std::size_t>(i)]),
                     Emitter::cell(fit.gaps.values.values[static_cast<std::size_t>(i)])});
  em.write_table(oc + "_placebo_time_path",
                 {"year", "actual", "counterfactual", "gap"}, prows,
                 {{"placebo_treatment_year", Emitter::cell(year)},
                  {"true_treatment_year", Emitter::cell(t.treatment_year)},
                  {"pre_rmse", Emitter::cell(fit.pre_rmse)},
                  {"post_rmse", Emitter::cell(fit.post_rmse)},
                  {"outcome", oc}});
}

inline void emit_trend_test(Emitter& em, const PanelDataset& p, const TreatmentSpec& t,
                            const RunConfig& c, const std::string& oc) {
  const ScmFit fit = fit_synthetic_control(p, t, oc, scm_options(c));
  ZaMode mode = ZaMode::both;
  if (c.za_mode == "intercept") mode = ZaMode::intercept;
  else if (c.za_mode == "trend") mode = ZaMode::trend;
  const BreakTestResult za = zivot_andrews_break(fit.actual, mode);
  const BreakTestResult wald_known =
      differential_trend_test(fit.gaps, c.trend_break_year != 0 ? c.trend_break_year
                                                                : t.treatment_year);
  const BreakTestResult wald_sup = differential_trend_test(fit.gaps);
  auto row = [](const std::string& name, const BreakTestResult& r) {
    return std::vector<std::string>{name, r.mode, Emitter::cell(r.statistic),
                                    Emitter::cell(r.break_year),
                                    Emitter::cell(r.p_value),
                                    Emitter::cell(r.p_value_upper),
                                    r.significant_5pct ? "true" : "false"};
  };
  em.write_table(oc + "_trend_test",
                 {"test", "mode", "statistic", "break_year", "p_value",
                  "p_value_upper", "significant_5pct"},
                 {row("unit_root_break", za), row("gap_trend_known_break", wald_known),
                  row("gap_trend_sup", wald_sup)},
                 {{"outcome", oc},
                  {"series", "actual treated path (unit root) / scm gap (trend)"}});
}

inline void emit_loo(Emitter& em, const PanelDataset& p, const TreatmentSpec& t,
                     const RunConfig& c, const std::string& oc) {
  const LooResult loo = leave_one_out(p, t, oc, scm_options(c));
  std::vector<std::vector<std::string>> rows;
  std::vector<std::vector<std::string>> paths;
  for (const auto& rep : loo.replications) {
    rows.push_back({rep.excluded_donor, Emitter::cell(rep.excluded_weight),
                    Emitter::cell(rep.gap_correlation),
                    Emitter::cell(rep.fit.pre_rmse), Emitter::cell(rep.fit.post_rmse)});
    for (int i = 0; i < rep.fit.counterfactual.size(); ++i)
      paths.push_back(
          {rep.excluded_donor, Emitter::cell(rep.fit.counterfactual.year_at(i)),
           Emitter::cell(rep.fit.counterfactual.values[static_cast<std::size_t>(i)])});
  }
  em.write_table(oc + "_loo",
                 {"excluded_donor", "excluded_weight", "gap_correlation", "pre_rmse",
                  "post_rmse"},
                 rows,
                 {{"baseline_pre_rmse", Emitter::cell(loo.baseline.pre_rmse)},
                  {"baseline_post_rmse", Emitter::cell(loo.baseline.post_rmse)},
                  {"outcome", oc}});
  em.write_table(oc + "_loo_paths", {"excluded_donor", "year", "counterfactual"},
                 paths, {{"outcome", oc}});
}

inline void emit_adv(Emitter& em, const std::string& name, const AdvEstimate& e,
                     const std::string& oc) {
  std::map<std::string, std::string> meta{{"method", e.method}, {"outcome", oc}};
  for (const auto& [k, v] : e.nuisance) meta[k] = Emitter::cell(v);
  em.write_table(oc + "_" + name,
                 {"att", "standard_error", "ci_low", "ci_high", "p_value", "method"},
                 {{Emitter::cell(e.att), Emitter::cell(e.standard_error),
                   Emitter::cell(e.ci95.first), Emitter::cell(e.ci95.second),
                   Emitter::cell(e.p_value), e.method}},
                 meta);
}

inline void emit_gsynth(Emitter& em, const PanelDataset& p, const TreatmentSpec& t,
                        const RunConfig& c, const std::string& oc) {
  GsynthOptions o;
  o.n_boot = c.gsynth_n_boot;
  o.seed = c.seed;
  o.threads = c.threads;
  emit_adv(em, "gsynth", fit_gsynth(p, t, oc, c.gsynth_factor_range, o), oc);
}

inline void emit_mc(Emitter& em, const PanelDataset& p, const TreatmentSpec& t,
                    const RunConfig& c, const std::string& oc) {
  MatrixCompletionOptions o;
  o.n_boot = c.mc_n_boot;
  o.seed = c.seed;
  o.threads = c.threads;
  emit_adv(em, "mc", fit_matrix_completion(p, t, oc, c.mc_lambda, o), oc);
}

inline void emit_lasso(Emitter& em, const PanelDataset& p, const TreatmentSpec& t,
                       const RunConfig& c, const std::string& oc) {
  std::vector<double> grid = c.lasso_lambda_grid;
  if (grid.empty())
    grid = {0.0, 1e-4, 1e-3, 1e-2, 0.1, 0.3, 1.0, 3.0, 10.0};
  const ScmFit fit = fit_lasso_scm(p, t, oc, grid);
  std::vector<std::vector<std::string>> wrows;
  for (std::size_t i = 0; i < fit.weights.units.size(); ++i)
    wrows.push_back({fit.weights.units[i],
                     Emitter::cell(fit.weights.w(static_cast<Eigen::Index>(i)))});
  std::map<std::string, std::string> meta{{"outcome", oc},
                                          {"intercept", Emitter::cell(fit.weights.intercept)},
                                          {"convex", "false"},
                                          {"method", "lasso-scm"}};
  for (const auto& [k, v] : fit.diagnostics) meta[k] = Emitter::cell(v);
  em.write_table(oc + "_lasso_weights", {"donor", "weight"}, wrows, meta);
  std::vector<std::vector<std::string>> prows;
  for (int i = 0; i < fit.actual.size(); ++i)
    prows.push_back({Emitter::cell(fit.actual.year_at(i)),
                     Emitter::cell(fit.actual.values[static_cast<std::size_t>(i)]),
                     Emitter::cell(fit.counterfactual.values[static_cast<std::size_t>(i)]),
                     Emitter::cell(fit.gaps.values.values[static_cast<std::size_t>(i)])});
  em.write_table(oc + "_lasso_path", {"year", "actual", "counterfactual", "gap"},
                 prows, {{"outcome", oc}});
}

inline void emit_sdid(Emitter& em, const PanelDataset& p, const TreatmentSpec& t,
                      const RunConfig& c, const std::string& oc) {
  const SdidResult r = fit_sdid(p, t, oc, c.sdid_regularization);
  em.write_table(oc + "_sdid",
                 {"tau", "standard_error", "ci_low", "ci_high", "p_value"},
                 {{Emitter::cell(r.tau), Emitter::cell(r.standard_error),
                   Emitter::cell(r.ci95.first), Emitter::cell(r.ci95.second),
                   Emitter::cell(r.p_value)}},
                 {{"outcome", oc},
                  {"zeta_unit", Emitter::cell(r.zeta_unit)},
                  {"zeta_time", Emitter::cell(r.zeta_time)},
                  {"noise_scale", Emitter::cell(r.noise_scale)},
                  {"n_placebo", Emitter::cell(r.n_placebo)},
                  {"nonzero_unit_weights", Emitter::cell(r.nonzero_unit_weights)},
                  {"nonzero_time_weights", Emitter::cell(r.nonzero_time_weights)},
                  {"method", "sdid"}});
  std::vector<std::vector<std::string>> uw;
  for (const auto& [u, w] : r.unit_weights) uw.push_back({u, Emitter::cell(w)});
  em.write_table(oc + "_sdid_unit_weights", {"donor", "weight"}, uw,
                 {{"outcome", oc}});
  std::vector<std::vector<std::string>> tw;
  for (const auto& [y, w] : r.time_weights) tw.push_back({Emitter::cell(y), Emitter::cell(w)});
  em.write_table(oc + "_sdid_time_weights", {"year", "weight"}, tw,
                 {{"outcome", oc}});
}

inline void emit_validate(Emitter& em, const PanelDataset& p) {
  const ValidationReport rep = validate_panel(p);
  std::vector<std::vector<std::string>> rows;
  for (const auto& v : rep.variables)
    rows.push_back({v.name, Emitter::cell(v.n), Emitter::cell(v.min),
                    Emitter::cell(v.max), Emitter::cell(v.mean),
                    v.constant ? "true" : "false"});
  em.write_table("validation", {"variable", "n", "min", "max", "mean", "constant"},
                 rows,
                 {{"balance_ok", rep.balance_ok ? "true" : "false"},
                  {"row_count", Emitter::cell(rep.row_count)}});
  std::vector<std::vector<std::string>> irows;
  for (const auto& [sev, msg] : rep.issues) irows.push_back({sev, msg});
  em.write_table("validation_issues", {"severity", "message"}, irows);
}

inline void emit_simulate(Emitter& em, const RunConfig& c) {
  if (c.sim_units < 2 || c.sim_years < 3)
    throw ConfigError("simulate needs at least 2 units and 3 years");
  if (c.sim_treatment_year - c.sim_first_year < 2 ||
      c.sim_treatment_year > c.sim_first_year + c.sim_years - 1)
    throw ConfigError("simulate treatment_year must leave 2 pre-years and 1 post-year");
  FactorModelSpec spec;
  spec.n_factors = c.sim_factors;
  spec.noise_sd = c.sim_noise_sd;
  spec.first_year = c.sim_first_year;
  spec.treatment_year = c.sim_treatment_year;
  spec.covariate_coefficients = c.sim_covariate_coefficients;
  const int n_post = c.sim_first_year + c.sim_years - c.sim_treatment_year;
  spec.treatment_effect.assign(static_cast<std::size_t>(n_post), c.sim_effect);
  const SimulatedPanel sim =
      simulate_factor_panel(spec, c.sim_units, c.sim_years, c.seed);
  em.write_panel("sim_panel", sim.panel,
                 {{"seed", std::to_string(c.seed)},
                  {"factors", Emitter::cell(c.sim_factors)},
                  {"noise_sd", Emitter::cell(c.sim_noise_sd)}});
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < sim.true_effect.size(); ++i)
    rows.push_back({Emitter::cell(sim.true_effect.year_at(i)),
                    Emitter::cell(sim.true_effect.values[static_cast<std::size_t>(i)])});
  em.write_table("sim_truth", {"year", "true_effect"}, rows,
                 {{"treated_unit", sim.treatment.treated_unit},
                  {"treatment_year", Emitter::cell(sim.treatment.treatment_year)},
                  {"seed", std::to_string(c.seed)}});
}

inline void emit_correlate(Emitter& em, const PanelDataset& p, const RunConfig& c) {
  std::vector<std::pair<std::string, std::string>> pairs = c.correlate_pairs;
  if (pairs.empty())
    for (std::size_t i = 0; i < c.outcomes.size(); ++i)
      for (std::size_t j = i + 1; j < c.outcomes.size(); ++j)
        pairs.emplace_back(c.outcomes[i], c.outcomes[j]);
  if (pairs.empty())
    throw ConfigError("correlate needs correlate.pairs or at least two outcomes");
  for (const auto& [a, b] : pairs) {
    if (!p.has_variable(a)) throw UnknownVariable("correlate", a);
    if (!p.has_variable(b)) throw UnknownVariable("correlate", b);
  }
  const CorrelationReport rep = cross_index_correlation(p, pairs);
  std::vector<std::vector<std::string>> rows;
  for (const auto& [key, cell] : rep.pairs)
    rows.push_back({key.first, key.second, Emitter::cell(cell.r),
                    Emitter::cell(cell.p_value), Emitter::cell(cell.n)});
  em.write_table("correlations", {"series_a", "series_b", "r", "p_value", "n"}, rows,
                 {{"method", "pearson, two-sided t test"}});

  if (c.outcomes.size() >= 2) {
    const CompositeResult comp =
        principal_composite(p, c.outcomes, c.composite_covariance);
    std::vector<std::vector<std::string>> lrows;
    for (std::size_t i = 0; i < comp.variables.size(); ++i)
      lrows.push_back({comp.variables[i],
                       Emitter::cell(comp.loadings(static_cast<Eigen::Index>(i)))});
    em.write_table("composite_loadings", {"variable", "loading"}, lrows,
                   {{"explained_share", Emitter::cell(comp.explained_share)},
                    {"method", comp.method}});
    std::vector<LongRow> vrows;
    for (std::size_t u = 0; u < comp.units.size(); ++u)
      for (Eigen::Index y = 0; y < comp.values.cols(); ++y)
        vrows.push_back({comp.units[u], comp.first_year + static_cast<int>(y),
                         "composite", comp.values(static_cast<Eigen::Index>(u), y)});
    em.write_panel("composite_values",
                   PanelDataset::from_rows(vrows, "emit_composite"),
                   {{"method", comp.method},
                    {"explained_share", Emitter::cell(comp.explained_share)}});
  }
}

} // namespace detail

// Batch entry point shared by the CLI and the tests. Returns a process exit
// status: 0 ok, 1 config/input validation failure, 2 estimation failure.
// Input problems are anything detectable before estimators run (config
// errors, unreadable panel, unknown variables or units); estimator throws on
// structurally valid input count as estimation failures.
inline int run_subcommand(const std::string& cmd, RunConfig cfg) {
  static const std::set<std::string> known{
      "validate", "scm", "did", "event-study", "placebo-space", "placebo-param",
      "placebo-time", "trend-test", "loo", "gsynth", "mc", "lasso-scm", "sdid",
      "simulate", "correlate", "report"};
  auto fail = [](int code, const std::exception& e) {
    std::fprintf(stderr, "panelcf: %s\n", e.what());
    return code;
  };
  if (!known.count(cmd)) {
    std::fprintf(stderr, "panelcf: unknown subcommand '%s'\n", cmd.c_str());
    return kExitValidation;
  }

  // ---- validation phase ----
  PanelDataset panel;
  TreatmentSpec treatment;
  bool have_panel = false;
  const bool needs_panel = cmd != "simulate";
  const bool needs_treatment =
      cmd != "simulate" && cmd != "validate" && cmd != "correlate";
  try {
    if (needs_panel) {
      if (cfg.panel_path.empty()) throw ConfigError("panel path is required");
      panel = load_panel_file(cfg.panel_path, cfg.schema);
      have_panel = true;
      panel.assign_roles(cfg.outcomes, cfg.covariates); // also checks existence
      detail::check_variables_exist(panel, cfg, cmd != "validate" && cmd != "correlate");
    }
    if (needs_treatment) treatment = detail::treatment_from_config(panel, cfg);
    if (cmd == "correlate") {
      if (cfg.correlate_pairs.empty() && cfg.outcomes.size() < 2)
        throw ConfigError("correlate needs correlate.pairs or at least two outcomes");
      for (const auto& [a, b] : cfg.correlate_pairs) {
        if (!panel.has_variable(a)) throw UnknownVariable("correlate", a);
        if (!panel.has_variable(b)) throw UnknownVariable("correlate", b);
      }
    }
  } catch (const std::exception& e) {
    return fail(kExitValidation, e);
  }
  (void)have_panel;

  // ---- estimation + emission phase ----
  try {
    Emitter em(cfg.out_dir);
    detail::write_run_manifest(em, cfg, cmd);
    if (cmd == "validate") {
      detail::emit_validate(em, panel);
    } else if (cmd == "simulate") {
      detail::emit_simulate(em, cfg);
    } else if (cmd == "correlate") {
      detail::emit_correlate(em, panel, cfg);
    } else {
      for (const auto& oc : cfg.outcomes) {
        if (cmd == "scm") detail::emit_scm(em, panel, treatment, cfg, oc);
        else if (cmd == "did") detail::emit_did(em, panel, treatment, cfg, oc);
        else if (cmd == "event-study")
          detail::emit_event_study(em, panel, treatment, cfg, oc);
        else if (cmd == "placebo-space")
          detail::emit_placebo_space(em, panel, treatment, cfg, oc);
        else if (cmd == "placebo-param")
          detail::emit_placebo_param(em, panel, treatment, cfg, oc);
        else if (cmd == "placebo-time")
          detail::emit_placebo_time(em, panel, treatment, cfg, oc);
        else if (cmd == "trend-test")
          detail::emit_trend_test(em, panel, treatment, cfg, oc);
        else if (cmd == "loo") detail::emit_loo(em, panel, treatment, cfg, oc);
        else if (cmd == "gsynth") detail::emit_gsynth(em, panel, treatment, cfg, oc);
        else if (cmd == "mc") detail::emit_mc(em, panel, treatment, cfg, oc);
        else if (cmd == "lasso-scm") detail::emit_lasso(em, panel, treatment, cfg, oc);
        else if (cmd == "sdid") detail::emit_sdid(em, panel, treatment, cfg, oc);
        else if (cmd == "report") {
          detail::emit_scm(em, panel, treatment, cfg, oc);
          detail::emit_did(em, panel, treatment, cfg, oc);
          detail::emit_event_study(em, panel, treatment, cfg, oc);
          detail::emit_placebo_space(em, panel, treatment, cfg, oc);
          detail::emit_placebo_param(em, panel, treatment, cfg, oc);
          detail::emit_placebo_time(em, panel, treatment, cfg, oc);
          detail::emit_trend_test(em, panel, treatment, cfg, oc);
          detail::emit_loo(em, panel, treatment, cfg, oc);
          detail::emit_gsynth(em, panel, treatment, cfg, oc);
          detail::emit_mc(em, panel, treatment, cfg, oc);
          detail::emit_lasso(em, panel, treatment, cfg, oc);
          detail::emit_sdid(em, panel, treatment, cfg, oc);
        }
      }
      if (cmd == "report" && cfg.outcomes.size() >= 2)
        detail::emit_correlate(em, panel, cfg);
    }
  } catch (const std::exception& e) {
    return fail(kExitEstimation, e);
  }
  return kExitOk;
}

} // namespace panelcf
