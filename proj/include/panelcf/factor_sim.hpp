#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "panelcf/panel.hpp"
#include "panelcf/rng.hpp"
#include "panelcf/series.hpp"

namespace panelcf {

// Latent-factor data-generating process
//   q_{j,t} = phi_t + z_{j,t}' theta + lambda_t' mu_j + eps_{j,t}
// with the treatment effect added to the treated unit from treatment_year on.
struct FactorModelSpec {
  std::vector<double> common_shocks;          // phi_t; empty = all zero
  std::vector<double> covariate_coefficients; // theta; one covariate per entry
  int n_factors = 0;
  double noise_sd = 1.0;
  std::vector<double> treatment_effect;       // gamma per post year; empty = none
  int first_year = 2000;
  int treatment_year = 2000;                  // first treated year
  int treated_unit = 0;                       // index into the generated units
  // explicit factor paths / loadings; drawn standard normal when absent
  std::optional<Eigen::MatrixXd> factors;     // years x F
  std::optional<Eigen::MatrixXd> loadings;    // units x F
};

struct SimulatedPanel {
  PanelDataset panel;       // outcome "q", covariates "z1", "z2", ...
  TreatmentSpec treatment;
  YearSeries true_effect;   // effect applied to the treated unit, post years
};

// Deterministic for a given seed. Draw order is fixed: factors, loadings,
// covariates (unit-major), then noise (unit-major), so changing one piece of
// the spec never silently reshuffles another piece's draws.
inline SimulatedPanel simulate_factor_panel(const FactorModelSpec& spec, int n_units,
                                            int n_years, std::uint64_t seed) {
  const std::string op = "simulate_factor_panel";
  if (n_units < 2 || n_years < 1)
    throw DimensionMismatch("advanced", op, "need >= 2 units and >= 1 year");
  if (spec.n_factors < 0 || spec.noise_sd < 0)
    throw DimensionMismatch("advanced", op, "F and noise_sd must be non-negative");
  if (!spec.common_shocks.empty() &&
      static_cast<int>(spec.common_shocks.size()) != n_years)
    throw DimensionMismatch("advanced", op, "common_shocks length");
  if (spec.treated_unit < 0 || spec.treated_unit >= n_units)
    throw DimensionMismatch("advanced", op, "treated_unit index");
  if (spec.treatment_year < spec.first_year ||
      spec.treatment_year > spec.first_year + n_years - 1)
    throw DimensionMismatch("advanced", op, "treatment_year outside the panel");

  Rng rng(seed);

  Eigen::MatrixXd fac(n_years, spec.n_factors);
  if (spec.factors) {
    if (spec.factors->rows() != n_years || spec.factors->cols() != spec.n_factors)
      throw DimensionMismatch("advanced", op, "factors shape");
    fac = *spec.factors;
  } else {
    for (int t = 0; t < n_years; ++t)
      for (int f = 0; f < spec.n_factors; ++f) fac(t, f) = rng.normal();
  }
  Eigen::MatrixXd load(n_units, spec.n_factors);
  if (spec.loadings) {
    if (spec.loadings->rows() != n_units || spec.loadings->cols() != spec.n_factors)
      throw DimensionMismatch("advanced", op, "loadings shape");
    load = *spec.loadings;
  } else {
    for (int j = 0; j < n_units; ++j)
      for (int f = 0; f < spec.n_factors; ++f) load(j, f) = rng.normal();
  }

  const int n_cov = static_cast<int>(spec.covariate_coefficients.size());
  std::vector<Eigen::MatrixXd> z(static_cast<std::size_t>(n_cov),
                                 Eigen::MatrixXd(n_units, n_years));
  for (int c = 0; c < n_cov; ++c)
    for (int j = 0; j < n_units; ++j)
      for (int t = 0; t < n_years; ++t)
        z[static_cast<std::size_t>(c)](j, t) = rng.normal();

  Eigen::MatrixXd q(n_units, n_years);
  for (int j = 0; j < n_units; ++j)
    for (int t = 0; t < n_years; ++t) {
      double v = spec.common_shocks.empty() ? 0.0
                                            : spec.common_shocks[static_cast<std::size_t>(t)];
      for (int c = 0; c < n_cov; ++c)
        v += spec.covariate_coefficients[static_cast<std::size_t>(c)] *
             z[static_cast<std::size_t>(c)](j, t);
      v += fac.row(t).dot(load.row(j));
      v += spec.noise_sd * rng.normal();
      q(j, t) = v;
    }

  const int t0 = spec.treatment_year - spec.first_year;
  YearSeries effect;
  effect.start_year = spec.treatment_year;
  for (int t = t0; t < n_years; ++t) {
    const std::size_t k = static_cast<std::size_t>(t - t0);
    const double g = k < spec.treatment_effect.size() ? spec.treatment_effect[k] : 0.0;
    effect.values.push_back(g);
    q(spec.treated_unit, t) += g;
  }

  // zero-padded names keep lexicographic order equal to generation order
  std::vector<std::string> units;
  for (int j = 0; j < n_units; ++j) {
    std::string id = std::to_string(j);
    units.push_back("U" + std::string(3 - std::min<std::size_t>(3, id.size()), '0') + id);
  }
  std::map<std::string, Eigen::MatrixXd> vars{{"q", std::move(q)}};
  for (int c = 0; c < n_cov; ++c)
    vars["z" + std::to_string(c + 1)] = std::move(z[static_cast<std::size_t>(c)]);

  SimulatedPanel out{PanelDataset::from_matrices(units, spec.first_year, vars),
                     TreatmentSpec{}, effect};
  std::vector<std::string> covariate_names;
  for (int c = 0; c < n_cov; ++c) covariate_names.push_back("z" + std::to_string(c + 1));
  out.panel.assign_roles({"q"}, covariate_names);
  out.treatment.treated_unit = units[static_cast<std::size_t>(spec.treated_unit)];
  out.treatment.treatment_year = spec.treatment_year;
  for (int j = 0; j < n_units; ++j)
    if (j != spec.treated_unit)
      out.treatment.donor_pool.push_back(units[static_cast<std::size_t>(j)]);
  return out;
}

} // namespace panelcf
