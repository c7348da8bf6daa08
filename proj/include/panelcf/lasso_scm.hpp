#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "panelcf/lasso.hpp"
#include "panelcf/scm.hpp"

namespace panelcf {

// Regression-style synthetic control: the treated unit's pre-period outcomes
// are regressed on the donors' (years as observations, donors as columns)
// with an L1 penalty, so weights may be negative or exceed one and the
// intercept relaxes the unit-sum constraint. lambda comes from the supplied
// grid by leave-one-pre-year-out cross-validation, ties resolving to the
// larger (sparser) value. The seed is accepted for interface stability; the
// year-deletion CV is deterministic and never consumes randomness.
inline ScmFit fit_lasso_scm(const PanelDataset& p, const TreatmentSpec& t,
                            const std::string& outcome,
                            const std::vector<double>& lambda_grid,
                            std::uint64_t /*seed*/ = 0,
                            const SolverOptions& solver = {}) {
  const std::string op = "fit_lasso_scm";
  if (lambda_grid.empty()) throw EmptyInput("advanced", op, "lambda grid is empty");
  for (double l : lambda_grid)
    if (l < 0) throw EmptyInput("advanced", op, "lambda must be >= 0");
  const long n_pre = t.treatment_year - p.first_year();
  if (n_pre < 2)
    throw InsufficientPrePeriod("advanced", op, "need >= 2 pre-treatment years");

  const long J = static_cast<long>(t.donor_pool.size());
  const auto& m = p.matrix(outcome);
  Eigen::MatrixXd x(n_pre, J);
  for (long j = 0; j < J; ++j)
    x.col(j) = m.row(p.unit_index(t.donor_pool[static_cast<std::size_t>(j)]))
                   .head(n_pre)
                   .transpose();
  Eigen::VectorXd y = m.row(p.unit_index(t.treated_unit)).head(n_pre).transpose();

  double best_lambda = lambda_grid.front();
  double best_mse = std::numeric_limits<double>::infinity();
  std::vector<double> grid = lambda_grid;
  std::sort(grid.begin(), grid.end());
  for (double lambda : grid) {
    double sse = 0.0;
    for (long held = 0; held < n_pre; ++held) {
      Eigen::MatrixXd xs(n_pre - 1, J);
      Eigen::VectorXd ys(n_pre - 1);
      long r = 0;
      for (long s = 0; s < n_pre; ++s) {
        if (s == held) continue;
        xs.row(r) = x.row(s);
        ys(r) = y(s);
        ++r;
      }
      const LassoFit f = lasso_fit(xs, ys, lambda, true, solver);
      const double pred = f.intercept + x.row(held) * f.coefficients;
      const double e = y(held) - pred;
      sse += e * e;
    }
    const double mse = sse / static_cast<double>(n_pre);
    const double tol = 1e-12 * (1.0 + best_mse);
    if (!std::isfinite(best_mse) || mse < best_mse - tol ||
        (std::abs(mse - best_mse) <= tol && lambda > best_lambda)) {
      best_mse = mse;
      best_lambda = lambda;
    }
  }

  const LassoFit f = lasso_fit(x, y, best_lambda, true, solver);

  ScmFit fit;
  fit.treatment = t;
  fit.outcome = outcome;
  fit.predictor_weights.rule = "lasso-cv";
  fit.weights.units = t.donor_pool;
  fit.weights.w = f.coefficients;
  fit.weights.intercept = f.intercept;
  fit.weights.convex = false;
  fit.weights.converged = f.converged;
  fit.actual = p.series(t.treated_unit, outcome);
  fit.counterfactual = weighted_donor_path(p, fit.weights, outcome, op);
  fit.gaps = gap_series_from(fit.actual, fit.counterfactual, t.treatment_year);
  fit.pre_rmse = rmse_of(fit.gaps.pre_values());
  fit.post_rmse = rmse_of(fit.gaps.post_values());
  const Eigen::VectorXd r = y - Eigen::VectorXd::Constant(n_pre, f.intercept) -
                            x * f.coefficients;
  fit.objective = r.squaredNorm() / (2.0 * static_cast<double>(n_pre)) +
                  best_lambda * f.coefficients.cwiseAbs().sum();
  fit.diagnostics["lambda"] = best_lambda;
  fit.diagnostics["cv_mse"] = best_mse;
  fit.diagnostics["nonzero_weights"] =
      static_cast<double>((f.coefficients.cwiseAbs().array() > 1e-8).count());
  return fit;
}

} // namespace panelcf
