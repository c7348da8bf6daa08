#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "panelcf/panel.hpp"
#include "panelcf/parallel.hpp"
#include "panelcf/qp.hpp"
#include "panelcf/series.hpp"
#include "panelcf/solver_options.hpp"
#include "panelcf/stats.hpp"

namespace panelcf {

// Diagonal predictor-importance weights (the V matrix), v_k >= 0, sum 1.
struct PredictorWeights {
  std::vector<std::string> labels;
  Eigen::VectorXd v;
  std::string rule;                    // "projection" or "uniform"
  bool degenerate_projection = false;  // all-zero projection fell back to uniform
  double validation_loss = 0.0;        // held-out outcome-path loss of the winner
};

// Donor weights. Convex mode: w >= 0, sum 1, zero intercept. Signed mode
// carries a free intercept and unconstrained weights.
struct WeightVector {
  std::vector<std::string> units;
  Eigen::VectorXd w;
  double intercept = 0.0;
  bool convex = true;
  bool converged = true;
  bool non_unique = false;

  std::map<std::string, double> as_map() const {
    std::map<std::string, double> m;
    for (std::size_t i = 0; i < units.size(); ++i)
      m[units[i]] = w(static_cast<Eigen::Index>(i));
    return m;
  }
};

struct ScmFit {
  TreatmentSpec treatment;
  std::string outcome;
  PredictorWeights predictor_weights;
  WeightVector weights;
  YearSeries actual;
  YearSeries counterfactual;
  GapSeries gaps;
  double pre_rmse = 0.0;
  double post_rmse = 0.0;
  double objective = 0.0; // weighted matching discrepancy at the solution
  std::map<std::string, double> diagnostics; // estimator-specific extras
};

struct ScmOptions {
  std::vector<std::string> covariates;
  SolverOptions solver;
  // First year of the validation window for V selection; 0 = midpoint of the
  // design period. Training years precede it.
  int validation_split_year = 0;
  unsigned threads = 1;
};

inline Eigen::VectorXd normalize_abs_weights(const Eigen::VectorXd& beta) {
  const double total = beta.cwiseAbs().sum();
  if (total <= 0.0) return Eigen::VectorXd::Zero(beta.size());
  return beta.cwiseAbs() / total;
}

namespace detail {

// Cross-sectional predictor matrix: rows = [treated, donors...], columns =
// the selected predictor indices of the design.
inline Eigen::MatrixXd unit_cross_section(const DesignMatrices& dm,
                                          const std::vector<Eigen::Index>& cols) {
  const auto j = dm.x_donors.cols();
  Eigen::MatrixXd a(j + 1, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    a(0, static_cast<Eigen::Index>(c)) = dm.x_treated(cols[c]);
    a.block(1, static_cast<Eigen::Index>(c), j, 1) = dm.x_donors.row(cols[c]).transpose();
  }
  return a;
}

// Least-norm projection slopes of y on the (column-centered) cross-section:
// centering makes the relevance weights invariant to common level shifts,
// and the pseudo-inverse splits weight symmetrically across duplicated
// predictors.
inline Eigen::VectorXd projection_beta(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
  Eigen::MatrixXd ac = a.rowwise() - a.colwise().mean();
  Eigen::VectorXd yc = y.array() - y.mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ac, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  return svd.solve(yc);
}

inline double entropy_of(const Eigen::VectorXd& v) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v(i) > 0.0) h -= v(i) * std::log(v(i));
  return h;
}

} // namespace detail

// Chooses the diagonal predictor weights by cross-validation over the design
// period: the projection rule derives v_k = |beta_k| / sum|beta| from the
// slopes of the held-out outcome level on the training-window predictors
// across units; it competes against uniform weights on held-out outcome-path
// loss, ties going to the higher-entropy (more uniform) candidate. The
// winning rule is then re-applied to the full design.
inline PredictorWeights select_predictor_weights(const DesignMatrices& dm,
                                                 int validation_split_year = 0) {
  const auto k = dm.x_treated.size();
  const auto t = static_cast<int>(dm.period_years.size());
  if (k == 0) throw EmptyPredictorSet("select_predictor_weights");

  PredictorWeights out;
  out.labels = dm.predictor_labels;

  auto apply_projection = [&](const std::vector<Eigen::Index>& cols,
                              const Eigen::VectorXd& y, bool& degenerate) {
    const Eigen::MatrixXd a = detail::unit_cross_section(dm, cols);
    const Eigen::VectorXd beta = detail::projection_beta(a, y);
    Eigen::VectorXd v = normalize_abs_weights(beta);
    degenerate = v.sum() <= 0.0;
    if (degenerate)
      v = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(cols.size()),
                                    1.0 / static_cast<double>(cols.size()));
    return v;
  };

  // Split the period: training years strictly before the validation year.
  int split = validation_split_year;
  if (split == 0 && t >= 2)
    split = dm.period_years[static_cast<std::size_t>(t - t / 2)];
  std::vector<Eigen::Index> train_cols, train_years_idx, val_years_idx;
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto& label = dm.predictor_labels[static_cast<std::size_t>(c)];
    const auto pos = label.rfind(':');
    const std::string tag = pos == std::string::npos ? "" : label.substr(pos + 1);
    int year = 0;
    const bool is_year = detail::parse_int(tag, year);
    if (!is_year || year < split) train_cols.push_back(c);
  }
  for (int i = 0; i < t; ++i) {
    if (dm.period_years[static_cast<std::size_t>(i)] < split)
      train_years_idx.push_back(i);
    else
      val_years_idx.push_back(i);
  }

  const bool cv_possible = t >= 2 && !train_years_idx.empty() &&
                           !val_years_idx.empty() && !train_cols.empty();
  bool projection_wins = true;
  if (cv_possible) {
    // Held-out target: each unit's mean outcome over the validation years.
    const auto j = dm.x_donors.cols();
    Eigen::VectorXd y_val(j + 1);
    {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(j + 1);
      for (auto i : val_years_idx) {
        acc(0) += dm.outcome_treated(i);
        acc.tail(j) += dm.outcome_donors.row(i).transpose();
      }
      y_val = acc / static_cast<double>(val_years_idx.size());
    }
    bool degenerate = false;
    const Eigen::VectorXd v_proj = apply_projection(train_cols, y_val, degenerate);
    const Eigen::VectorXd v_unif = Eigen::VectorXd::Constant(
        static_cast<Eigen::Index>(train_cols.size()),
        1.0 / static_cast<double>(train_cols.size()));

    auto validation_loss = [&](const Eigen::VectorXd& v) {
      SimplexQpProblem prob;
      const auto kt = static_cast<Eigen::Index>(train_cols.size());
      prob.x_treated.resize(kt);
      prob.x_donors.resize(kt, j);
      prob.v = Eigen::MatrixXd::Zero(kt, kt);
      for (Eigen::Index c = 0; c < kt; ++c) {
        prob.x_treated(c) = dm.x_treated(train_cols[static_cast<std::size_t>(c)]);
        prob.x_donors.row(c) = dm.x_donors.row(train_cols[static_cast<std::size_t>(c)]);
        prob.v(c, c) = v(c);
      }
      const auto w = solve_simplex_qp(prob).w;
      double loss = 0.0;
      for (auto i : val_years_idx) {
        const double e = dm.outcome_treated(i) - dm.outcome_donors.row(i) * w;
        loss += e * e;
      }
      return loss;
    };

    const double loss_proj = degenerate ? std::numeric_limits<double>::infinity()
                                        : validation_loss(v_proj);
    const double loss_unif = validation_loss(v_unif);
    const double tie_tol = 1e-12 * (1.0 + std::min(loss_proj, loss_unif));
    if (std::abs(loss_proj - loss_unif) <= tie_tol)
      projection_wins = detail::entropy_of(v_proj) > detail::entropy_of(v_unif);
    else
      projection_wins = loss_proj < loss_unif;
    out.validation_loss = projection_wins ? loss_proj : loss_unif;
    out.degenerate_projection = degenerate;
  }

  std::vector<Eigen::Index> all_cols(static_cast<std::size_t>(k));
  for (Eigen::Index c = 0; c < k; ++c) all_cols[static_cast<std::size_t>(c)] = c;
  if (projection_wins && cv_possible) {
    const auto j = dm.x_donors.cols();
    Eigen::VectorXd y_full = Eigen::VectorXd::Zero(j + 1);
    for (int i = 0; i < t; ++i) {
      y_full(0) += dm.outcome_treated(i);
      y_full.tail(j) += dm.outcome_donors.row(i).transpose();
    }
    y_full /= static_cast<double>(t);
    bool degenerate = false;
    out.v = apply_projection(all_cols, y_full, degenerate);
    out.degenerate_projection = out.degenerate_projection || degenerate;
    out.rule = degenerate ? "uniform" : "projection";
  } else {
    out.v = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
    out.rule = "uniform";
  }
  return out;
}

inline YearSeries weighted_donor_path(const PanelDataset& p, const WeightVector& wv,
                                      const std::string& outcome,
                                      const std::string& op = "counterfactual_path") {
  if (!p.has_variable(outcome)) throw UnknownVariable(op, outcome);
  const auto& m = p.matrix(outcome);
  Eigen::RowVectorXd path = Eigen::RowVectorXd::Constant(p.n_years(), wv.intercept);
  for (std::size_t i = 0; i < wv.units.size(); ++i) {
    if (!p.has_unit(wv.units[i])) throw MissingDonorSeries(op, wv.units[i]);
    path += wv.w(static_cast<Eigen::Index>(i)) * m.row(p.unit_index(wv.units[i]));
  }
  YearSeries s;
  s.start_year = p.first_year();
  s.values.assign(path.begin(), path.end());
  return s;
}

inline GapSeries gap_series_from(const YearSeries& actual, const YearSeries& counterfactual,
                                 int treatment_year) {
  GapSeries g;
  g.treatment_year = treatment_year;
  g.values.start_year = actual.start_year;
  g.values.values.resize(actual.values.size());
  for (std::size_t i = 0; i < actual.values.size(); ++i)
    g.values.values[i] = actual.values[i] - counterfactual.values[i];
  return g;
}

// Gap series of an existing fit (actual minus counterfactual; the post-period
// mean of this series is the ATT).
inline GapSeries gap_series(const ScmFit& fit) { return fit.gaps; }

inline YearSeries counterfactual_path(const ScmFit& fit, const PanelDataset& p,
                                      const std::string& outcome) {
  return weighted_donor_path(p, fit.weights, outcome);
}

// Nested fit: predictor weights by cross-validated selection, then donor
// weights from the simplex-constrained match under those predictor weights.
inline ScmFit fit_synthetic_control(const PanelDataset& p, const TreatmentSpec& t,
                                    const std::string& outcome,
                                    const ScmOptions& opts = {}) {
  const std::string op = "fit_synthetic_control";
  if (t.treatment_year - p.first_year() < 2)
    throw InsufficientPrePeriod("scm", op, "need >= 2 pre-treatment years");
  const DesignMatrices dm = build_default_design(p, t, outcome, opts.covariates);
  const double pre_var =
      (dm.outcome_treated.array() - dm.outcome_treated.mean()).square().sum();
  if (pre_var <= 0.0)
    throw InsufficientVariation("scm", op,
                                "treated pre-period outcome '" + outcome + "' is constant");

  ScmFit fit;
  fit.treatment = t;
  fit.outcome = outcome;
  fit.predictor_weights = select_predictor_weights(dm, opts.validation_split_year);

  SimplexQpProblem prob;
  prob.x_treated = dm.x_treated;
  prob.x_donors = dm.x_donors;
  prob.v = fit.predictor_weights.v.asDiagonal();
  const SimplexQpSolution sol = solve_simplex_qp(prob, opts.solver);

  fit.weights.units = dm.donor_order;
  fit.weights.w = sol.w;
  fit.weights.convex = true;
  fit.weights.converged = sol.converged;
  fit.weights.non_unique = sol.non_unique;
  fit.objective = sol.objective;

  fit.actual = p.series(t.treated_unit, outcome);
  fit.counterfactual = weighted_donor_path(p, fit.weights, outcome, op);
  fit.gaps = gap_series_from(fit.actual, fit.counterfactual, t.treatment_year);
  fit.pre_rmse = rmse_of(fit.gaps.pre_values());
  fit.post_rmse = rmse_of(fit.gaps.post_values());
  return fit;
}

struct LooReplication {
  std::string excluded_donor;
  double excluded_weight = 0.0;
  ScmFit fit;
  double gap_correlation = 0.0; // against the baseline gap series, all years
};

struct LooResult {
  ScmFit baseline;
  std::vector<LooReplication> replications;
};

// Sensitivity to influential donors: every donor carrying positive baseline
// weight is excluded in turn and the fit repeated without it. Replications
// are independent (ordered by donor name) and may run in parallel.
inline LooResult leave_one_out(const PanelDataset& p, const TreatmentSpec& t,
                               const std::string& outcome, const ScmOptions& opts = {}) {
  const std::string op = "leave_one_out";
  if (t.donor_pool.size() < 2)
    throw EmptyDonorPool(op, "need >= 2 donors to exclude one");

  LooResult out;
  out.baseline = fit_synthetic_control(p, t, outcome, opts);

  std::vector<std::pair<std::string, double>> excluded;
  for (std::size_t i = 0; i < out.baseline.weights.units.size(); ++i) {
    const double w = out.baseline.weights.w(static_cast<Eigen::Index>(i));
    if (w > 1e-8) excluded.emplace_back(out.baseline.weights.units[i], w);
  }
  // donor order is already lexicographic; keep it

  out.replications.resize(excluded.size());
  parallel_for(excluded.size(), opts.threads, [&](std::size_t i) {
    TreatmentSpec sub = t;
    sub.donor_pool.clear();
    for (const auto& d : t.donor_pool)
      if (d != excluded[i].first) sub.donor_pool.push_back(d);
    LooReplication rep;
    rep.excluded_donor = excluded[i].first;
    rep.excluded_weight = excluded[i].second;
    rep.fit = fit_synthetic_control(p, sub, outcome, opts);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    const auto& a = out.baseline.gaps.values.values;
    const auto& b = rep.fit.gaps.values.values;
    const double ma = mean_of(a), mb = mean_of(b);
    for (std::size_t j = 0; j < a.size(); ++j) {
      sxy += (a[j] - ma) * (b[j] - mb);
      sxx += (a[j] - ma) * (a[j] - ma);
      syy += (b[j] - mb) * (b[j] - mb);
    }
    rep.gap_correlation = (sxx > 0 && syy > 0) ? sxy / std::sqrt(sxx * syy) : 0.0;
    out.replications[i] = std::move(rep);
  });
  return out;
}

} // namespace panelcf
