#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "panelcf/ols.hpp"
#include "panelcf/panel.hpp"

namespace panelcf {

struct DidEstimate {
  double effect = 0.0;
  double standard_error = 0.0;
  std::pair<double, double> ci95{0.0, 0.0};
  long nobs = 0;
  double within_r2 = 0.0;
  std::string spec; // "static" or "dynamic"
  std::string notes;
};

struct EventStudyCoef {
  double estimate = 0.0;
  double standard_error = 0.0;
};

struct EventStudyResult {
  std::map<int, EventStudyCoef> coefficients; // relative year -> estimate
  int reference_year = -1;                    // relative; pinned at zero
  long nobs = 0;
};

namespace detail {

// Long-form regression sample over (sample units) x (selected years), with
// unit and year fixed effects absorbed by exact double demeaning — valid in
// one pass because the grid is balanced.
struct TwfeSample {
  std::vector<std::string> units; // treated first? no: sorted sample units
  std::vector<int> years;
  Eigen::MatrixXd x;        // demeaned regressors, one row per (unit, year)
  Eigen::VectorXd y;        // demeaned outcome
  std::vector<long> unit_id;
  std::vector<long> year_id;
  std::vector<std::string> names;
  double tss = 0.0;
};

inline void two_way_demean(Eigen::Map<Eigen::MatrixXd> col, long n_units, long n_years) {
  // col arranged unit-major: row r = unit r / n_years, year r % n_years
  Eigen::MatrixXd m(n_years, n_units);
  for (long u = 0; u < n_units; ++u)
    for (long t = 0; t < n_years; ++t) m(t, u) = col(u * n_years + t, 0);
  const Eigen::VectorXd year_means = m.rowwise().mean();
  const Eigen::RowVectorXd unit_means = m.colwise().mean();
  const double grand = m.mean();
  m.colwise() -= year_means;
  m.rowwise() -= unit_means;
  m.array() += grand;
  for (long u = 0; u < n_units; ++u)
    for (long t = 0; t < n_years; ++t) col(u * n_years + t, 0) = m(t, u);
}

inline TwfeSample build_twfe_sample(const PanelDataset& p, const TreatmentSpec& t,
                                    const std::string& outcome,
                                    const std::vector<std::string>& covariates,
                                    const std::vector<int>& years,
                                    const std::vector<std::pair<std::string, std::vector<double>>>& extra,
                                    const std::string& op) {
  TwfeSample s;
  s.units.push_back(t.treated_unit);
  for (const auto& d : t.donor_pool) s.units.push_back(d);
  std::sort(s.units.begin(), s.units.end());
  s.years = years;
  const long nu = static_cast<long>(s.units.size());
  const long ny = static_cast<long>(s.years.size());
  const long n = nu * ny;
  if (nu < 2 || ny < 2)
    throw EmptyInput("did", op, "need >= 2 units and >= 2 years");
  if (!p.has_variable(outcome)) throw UnknownVariable(op, outcome);
  for (const auto& c : covariates)
    if (!p.has_variable(c)) throw UnknownVariable(op, c);

  const long k = 1 + static_cast<long>(covariates.size()) +
                 static_cast<long>(extra.size());
  s.x.resize(n, k);
  s.y.resize(n);
  s.unit_id.resize(static_cast<std::size_t>(n));
  s.year_id.resize(static_cast<std::size_t>(n));
  s.names.push_back("treated_post");
  for (const auto& c : covariates) s.names.push_back(c);
  for (const auto& [name, vals] : extra) s.names.push_back(name);

  const auto& qy = p.matrix(outcome);
  for (long u = 0; u < nu; ++u) {
    const auto row = p.unit_index(s.units[static_cast<std::size_t>(u)]);
    const bool is_treated = s.units[static_cast<std::size_t>(u)] == t.treated_unit;
    for (long j = 0; j < ny; ++j) {
      const long r = u * ny + j;
      const int year = s.years[static_cast<std::size_t>(j)];
      const long ycol = year - p.first_year();
      s.y(r) = qy(row, ycol);
      s.x(r, 0) = (is_treated && year >= t.treatment_year) ? 1.0 : 0.0;
      for (std::size_t c = 0; c < covariates.size(); ++c)
        s.x(r, 1 + static_cast<long>(c)) = p.matrix(covariates[c])(row, ycol);
      for (std::size_t c = 0; c < extra.size(); ++c)
        s.x(r, 1 + static_cast<long>(covariates.size()) + static_cast<long>(c)) =
            extra[c].second[static_cast<std::size_t>(r)];
      s.unit_id[static_cast<std::size_t>(r)] = u;
      s.year_id[static_cast<std::size_t>(r)] = j;
    }
  }

  two_way_demean(Eigen::Map<Eigen::MatrixXd>(s.y.data(), n, 1), nu, ny);
  for (long c = 0; c < k; ++c)
    two_way_demean(Eigen::Map<Eigen::MatrixXd>(s.x.col(c).data(), n, 1), nu, ny);
  s.tss = s.y.squaredNorm();
  return s;
}

inline OlsFit cluster_twfe_fit(const TwfeSample& s, const std::string& op) {
  OlsOptions o;
  o.cluster_a = s.unit_id;
  o.cluster_b = s.year_id;
  // unit FE + year FE share one level: N + T - 1 absorbed parameters
  o.absorbed_params = static_cast<long>(s.units.size()) +
                      static_cast<long>(s.years.size()) - 1;
  try {
    return ols_fit(s.x, s.y, o, s.names);
  } catch (RankDeficient& e) {
    throw RankDeficient(op, e.dependent_columns);
  }
}

} // namespace detail

// Static two-way fixed-effects estimate: outcome on a treated-and-post dummy
// plus covariates, unit and year effects absorbed, standard errors two-way
// clustered by unit and year.
inline DidEstimate fit_twfe_did(const PanelDataset& p, const TreatmentSpec& t,
                                const std::string& outcome,
                                const std::vector<std::string>& covariates = {}) {
  const std::string op = "fit_twfe_did";
  std::vector<int> years;
  for (int y = p.first_year(); y <= p.last_year(); ++y) years.push_back(y);
  const auto s = detail::build_twfe_sample(p, t, outcome, covariates, years, {}, op);
  const auto fit = detail::cluster_twfe_fit(s, op);

  DidEstimate out;
  out.effect = fit.coefficients(0);
  out.standard_error = fit.se(0);
  out.ci95 = {out.effect - 1.96 * out.standard_error,
              out.effect + 1.96 * out.standard_error};
  out.nobs = fit.nobs;
  out.within_r2 = s.tss > 0 ? 1.0 - fit.rss / s.tss : 1.0;
  out.spec = "static";
  return out;
}

// Dynamic variant: adds the one-year-lagged outcome, unit-specific linear
// trends, and year shocks (the single-region reading of region-by-year
// interactions; a fully saturated unit-by-year set would absorb the
// treatment). The first sample year is dropped to form the lag.
inline DidEstimate fit_dynamic_did(const PanelDataset& p, const TreatmentSpec& t,
                                   const std::string& outcome,
                                   const std::vector<std::string>& covariates = {}) {
  const std::string op = "fit_dynamic_did";
  if (p.n_years() < 2) throw LagUnavailable("panel has fewer than 2 years");
  if (t.treatment_year - p.first_year() < 2)
    throw LagUnavailable("need >= 2 pre-treatment years; the lag consumes one");

  std::vector<int> years;
  for (int y = p.first_year() + 1; y <= p.last_year(); ++y) years.push_back(y);

  std::vector<std::string> units{t.treated_unit};
  for (const auto& d : t.donor_pool) units.push_back(d);
  std::sort(units.begin(), units.end());
  const long nu = static_cast<long>(units.size());
  const long ny = static_cast<long>(years.size());

  std::vector<std::pair<std::string, std::vector<double>>> extra;
  {
    const auto& qy = p.matrix(outcome);
    std::vector<double> lag(static_cast<std::size_t>(nu * ny));
    for (long u = 0; u < nu; ++u) {
      const auto row = p.unit_index(units[static_cast<std::size_t>(u)]);
      for (long j = 0; j < ny; ++j)
        lag[static_cast<std::size_t>(u * ny + j)] =
            qy(row, years[static_cast<std::size_t>(j)] - 1 - p.first_year());
    }
    extra.emplace_back("lag_" + outcome, std::move(lag));
  }
  // unit-specific trends, one unit left out (its trend is the year-effect
  // baseline; keeping all of them would be collinear with the year effects)
  for (long u = 1; u < nu; ++u) {
    std::vector<double> tr(static_cast<std::size_t>(nu * ny), 0.0);
    for (long j = 0; j < ny; ++j)
      tr[static_cast<std::size_t>(u * ny + j)] = static_cast<double>(j + 1);
    extra.emplace_back("trend_" + units[static_cast<std::size_t>(u)], std::move(tr));
  }

  const auto s = detail::build_twfe_sample(p, t, outcome, covariates, years, extra, op);
  const auto fit = detail::cluster_twfe_fit(s, op);

  DidEstimate out;
  out.effect = fit.coefficients(0);
  out.standard_error = fit.se(0);
  out.ci95 = {out.effect - 1.96 * out.standard_error,
              out.effect + 1.96 * out.standard_error};
  out.nobs = fit.nobs;
  out.within_r2 = s.tss > 0 ? 1.0 - fit.rss / s.tss : 1.0;
  out.spec = "dynamic";
  out.notes = "lagged outcome + unit-specific linear trends + year shocks "
              "(single-region interpretation of region-by-year interactions)";
  return out;
}

// Relative-year treatment indicators over [window.first, window.second],
// omitting -1 (the year before treatment) as the reference category.
inline EventStudyResult event_study(const PanelDataset& p, const TreatmentSpec& t,
                                    const std::string& outcome,
                                    const std::vector<std::string>& covariates,
                                    std::pair<int, int> window) {
  const std::string op = "event_study";
  if (window.first > window.second)
    throw EmptyInput("did", op, "window bounds reversed");
  if (window.first > -1 || window.second < 0)
    throw EmptyInput("did", op, "window must cover >= 1 pre and >= 1 post relative year");

  std::vector<int> years;
  for (int y = p.first_year(); y <= p.last_year(); ++y) years.push_back(y);

  std::vector<std::string> units{t.treated_unit};
  for (const auto& d : t.donor_pool) units.push_back(d);
  std::sort(units.begin(), units.end());
  const long nu = static_cast<long>(units.size());
  const long ny = static_cast<long>(years.size());

  // only relative years that exist in the panel get a dummy
  std::vector<int> rel_years;
  for (int r = window.first; r <= window.second; ++r) {
    const int year = t.treatment_year + r;
    if (r != -1 && year >= p.first_year() && year <= p.last_year())
      rel_years.push_back(r);
  }
  if (rel_years.empty()) throw EmptyInput("did", op, "window has no panel years");

  std::vector<std::pair<std::string, std::vector<double>>> extra;
  long treated_u = -1;
  for (long u = 0; u < nu; ++u)
    if (units[static_cast<std::size_t>(u)] == t.treated_unit) treated_u = u;
  for (int r : rel_years) {
    std::vector<double> dummy(static_cast<std::size_t>(nu * ny), 0.0);
    const long j = (t.treatment_year + r) - p.first_year();
    dummy[static_cast<std::size_t>(treated_u * ny + j)] = 1.0;
    extra.emplace_back("rel_" + std::to_string(r), std::move(dummy));
  }

  // the sample builder's own treated_post dummy is replaced by the event set,
  // so assemble the design without it
  auto s = detail::build_twfe_sample(p, t, outcome, covariates, years, extra, op);
  Eigen::MatrixXd x = s.x.rightCols(s.x.cols() - 1);
  std::vector<std::string> names(s.names.begin() + 1, s.names.end());
  OlsOptions o;
  o.cluster_a = s.unit_id;
  o.cluster_b = s.year_id;
  o.absorbed_params = nu + ny - 1;
  OlsFit fit;
  try {
    fit = ols_fit(x, s.y, o, names);
  } catch (RankDeficient& e) {
    throw RankDeficient(op, e.dependent_columns);
  }

  EventStudyResult out;
  out.reference_year = -1;
  out.nobs = fit.nobs;
  const long kc = static_cast<long>(covariates.size());
  for (std::size_t i = 0; i < rel_years.size(); ++i) {
    const auto col = kc + static_cast<long>(i);
    out.coefficients[rel_years[i]] = {fit.coefficients(col), fit.se(col)};
  }
  if (window.first <= -1 && -1 <= window.second) out.coefficients[-1] = {0.0, 0.0};
  return out;
}

} // namespace panelcf
