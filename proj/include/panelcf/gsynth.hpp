#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "panelcf/advanced_types.hpp"
#include "panelcf/panel.hpp"
#include "panelcf/parallel.hpp"
#include "panelcf/rng.hpp"
#include "panelcf/stats.hpp"

namespace panelcf {

struct GsynthOptions {
  long n_boot = 500;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

namespace detail {

struct GsynthCore {
  Eigen::VectorXd col_means;  // donor cross-section mean per year
  Eigen::MatrixXd factor_dirs; // years x F_max right singular vectors of the
                               // two-way-demeaned donor matrix
  Eigen::MatrixXd donor_resid; // donors x years, residuals at F_max
  Eigen::MatrixXd donors;      // donors x years raw
  Eigen::VectorXd treated;     // years
};

// Donor-side factor extraction: two-way demean, SVD, keep the leading f_max
// right singular vectors as factor paths and the rank-f_max residual.
inline GsynthCore build_gsynth_core(const Eigen::MatrixXd& donors,
                                    const Eigen::VectorXd& treated, int f_max) {
  const auto J = donors.rows();
  const auto T = donors.cols();
  GsynthCore core;
  core.donors = donors;
  core.treated = treated;
  core.col_means = donors.colwise().mean().transpose();
  Eigen::MatrixXd demeaned = donors;
  const Eigen::VectorXd row_means = demeaned.rowwise().mean();
  const double grand = demeaned.mean();
  demeaned.colwise() -= row_means;
  demeaned.rowwise() -= core.col_means.transpose() -
                        Eigen::RowVectorXd::Constant(T, grand);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(demeaned,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  core.factor_dirs = svd.matrixV().leftCols(std::max(f_max, 1));
  Eigen::MatrixXd low = Eigen::MatrixXd::Zero(J, T);
  for (int k = 0; k < f_max; ++k)
    low += svd.singularValues()(k) * svd.matrixU().col(k) *
           svd.matrixV().col(k).transpose();
  core.donor_resid = demeaned - low;
  return core;
}

// Treated-unit projection on [1, factor columns] over the given rows, then
// imputation over all years.
inline Eigen::VectorXd project_and_impute(const GsynthCore& core, int f,
                                          const std::vector<int>& fit_rows,
                                          const Eigen::VectorXd& treated) {
  const auto n = static_cast<Eigen::Index>(fit_rows.size());
  Eigen::MatrixXd x(n, f + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int t = fit_rows[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    for (int k = 0; k < f; ++k) x(i, k + 1) = core.factor_dirs(t, k);
    y(i) = treated(t) - core.col_means(t);
  }
  const Eigen::VectorXd b =
      (x.transpose() * x).ldlt().solve(x.transpose() * y);
  const auto T = core.col_means.size();
  Eigen::VectorXd path(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    double v = core.col_means(t) + b(0);
    for (int k = 0; k < f; ++k) v += b(k + 1) * core.factor_dirs(t, k);
    path(t) = v;
  }
  return path;
}

} // namespace detail

// Interactive fixed effects by donor-side factor extraction: the donor matrix
// is two-way demeaned, its leading right singular vectors serve as common
// factor paths, and the treated unit's loadings come from an intercept-plus-
// factors regression on its pre-period deviations from the donor year means.
// The counterfactual is the imputed path; ATT averages the post-period gap.
// The factor count is picked from factor_range by leave-one-pre-year-out
// cross-validation (ties to the smaller count). Inference: a no-effect pseudo
// panel is drawn per replicate — every unit (treated and donors) gets its
// fitted path plus an independently sign-flipped donor residual row — and the
// whole factor model is re-estimated at the selected count, so the replicate
// spread carries factor-estimation error as well as idiosyncratic noise. SE
// is that spread; the p-value is the add-one share of replicates at least as
// large as the estimate.
inline AdvEstimate fit_gsynth(const PanelDataset& p, const TreatmentSpec& t,
                              const std::string& outcome,
                              std::vector<int> factor_range = {0, 1, 2, 3, 4, 5},
                              const GsynthOptions& opts = {}) {
  const std::string op = "fit_gsynth";
  const long T = p.n_years();
  const long t0 = t.treatment_year - p.first_year(); // first post index
  const long n_pre = t0;
  const long J = static_cast<long>(t.donor_pool.size());
  if (factor_range.empty()) throw FactorRangeInvalid("empty factor range");
  std::sort(factor_range.begin(), factor_range.end());
  const int f_max = factor_range.back();
  if (factor_range.front() < 0 ||
      f_max > static_cast<int>(std::min(J, n_pre)) - 2)
    throw FactorRangeInvalid("range must lie in [0, min(J, T_pre) - 2]");

  Eigen::MatrixXd donors(J, T);
  const auto& m = p.matrix(outcome);
  for (long j = 0; j < J; ++j)
    donors.row(j) = m.row(p.unit_index(t.donor_pool[static_cast<std::size_t>(j)]));
  const Eigen::VectorXd treated = m.row(p.unit_index(t.treated_unit)).transpose();
  const detail::GsynthCore core = detail::build_gsynth_core(donors, treated, f_max);

  std::vector<int> pre_rows;
  for (long s = 0; s < n_pre; ++s) pre_rows.push_back(static_cast<int>(s));

  // leave-one-pre-year-out CV over the factor range
  int best_f = factor_range.front();
  double best_mse = std::numeric_limits<double>::infinity();
  std::map<std::string, double> cv_trace;
  for (int f : factor_range) {
    double sse = 0.0;
    for (long held = 0; held < n_pre; ++held) {
      std::vector<int> rows;
      for (long s = 0; s < n_pre; ++s)
        if (s != held) rows.push_back(static_cast<int>(s));
      const Eigen::VectorXd path = detail::project_and_impute(core, f, rows, core.treated);
      const double e = core.treated(held) - path(held);
      sse += e * e;
    }
    const double mse = sse / static_cast<double>(n_pre);
    cv_trace["cv_mse_f" + std::to_string(f)] = mse;
    if (mse < best_mse) { // strict: ties resolve to the smaller f seen first
      best_mse = mse;
      best_f = f;
    }
  }

  const Eigen::VectorXd path =
      detail::project_and_impute(core, best_f, pre_rows, core.treated);
  double att = 0.0;
  for (long s = t0; s < T; ++s) att += core.treated(s) - path(s);
  att /= static_cast<double>(T - t0);

  AdvEstimate out;
  out.att = att;
  out.method = best_f == 0 ? "fixed_effects" : "ife";
  out.nuisance = std::move(cv_trace);
  out.nuisance["factors"] = best_f;
  out.nuisance["cv_mse"] = best_mse;
  out.nuisance["n_boot"] = static_cast<double>(opts.n_boot);

  if (opts.n_boot > 0) {
    // residuals and fitted donor rows at the selected factor count
    const detail::GsynthCore bcore = detail::build_gsynth_core(donors, treated, best_f);
    const Eigen::MatrixXd donor_fitted = donors - bcore.donor_resid;
    std::vector<double> boot(static_cast<std::size_t>(opts.n_boot));
    parallel_for(boot.size(), opts.threads, [&](std::size_t b) {
      Rng rng = Rng::stream(opts.seed, static_cast<std::uint64_t>(b));
      const long jt = static_cast<long>(rng.below(static_cast<std::uint64_t>(J)));
      const double st = rng.sign();
      const Eigen::VectorXd pseudo =
          path + st * bcore.donor_resid.row(jt).transpose();
      Eigen::MatrixXd pseudo_donors(J, T);
      for (long i = 0; i < J; ++i) {
        const long k = static_cast<long>(rng.below(static_cast<std::uint64_t>(J)));
        const double si = rng.sign();
        pseudo_donors.row(i) = donor_fitted.row(i) + si * bcore.donor_resid.row(k);
      }
      const detail::GsynthCore pc =
          detail::build_gsynth_core(pseudo_donors, pseudo, best_f);
      const Eigen::VectorXd pp =
          detail::project_and_impute(pc, best_f, pre_rows, pseudo);
      double a = 0.0;
      for (long s = t0; s < T; ++s) a += pseudo(s) - pp(s);
      boot[b] = a / static_cast<double>(T - t0);
    });
    out.standard_error = sample_sd(boot);
    long hits = 0;
    for (double v : boot)
      if (std::abs(v) >= std::abs(att)) ++hits;
    out.p_value = static_cast<double>(hits + 1) / static_cast<double>(opts.n_boot + 1);
    out.ci95 = {att - 1.96 * out.standard_error, att + 1.96 * out.standard_error};
  } else {
    out.ci95 = {att, att};
    out.p_value = 1.0;
  }
  return out;
}

} // namespace panelcf
