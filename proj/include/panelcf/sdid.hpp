#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "panelcf/panel.hpp"
#include "panelcf/qp.hpp"
#include "panelcf/stats.hpp"

namespace panelcf {

struct SdidResult {
  double tau = 0.0;
  double standard_error = 0.0;
  std::pair<double, double> ci95{0.0, 0.0};
  double p_value = 1.0;
  std::map<std::string, double> unit_weights; // donor -> weight on the simplex
  std::map<int, double> time_weights;         // pre year -> weight on the simplex
  long nonzero_unit_weights = 0;
  long nonzero_time_weights = 0;
  double zeta_unit = 0.0;
  double zeta_time = 0.0;
  double noise_scale = 0.0; // sd of donor pre-period first differences
  long n_placebo = 0;       // donor permutations behind the standard error
};

namespace detail {

struct SdidCore {
  Eigen::VectorXd omega;  // donor weights
  Eigen::VectorXd lambda; // pre-year weights
  double tau = 0.0;
  double zeta_unit = 0.0;
  double zeta_time = 0.0;
  double sigma = 0.0;
};

// donors: J x T outcome block, treated: length-T series, t0: first post index.
// Both weight problems carry an intercept, realized by centering: own-series
// time centering for the unit match, cross-donor centering for the time
// match. That is what makes the estimate exactly invariant to adding a
// constant to any single unit's series.
inline SdidCore sdid_weights(const Eigen::MatrixXd& donors, const Eigen::VectorXd& treated,
                             long t0, std::optional<double> zeta_override,
                             const SolverOptions& solver) {
  const long J = donors.rows();
  const long T = donors.cols();
  const long n_post = T - t0;

  SdidCore core;
  {
    double sum = 0.0, sumsq = 0.0;
    long n = 0;
    for (long j = 0; j < J; ++j)
      for (long s = 1; s < t0; ++s) {
        const double d = donors(j, s) - donors(j, s - 1);
        sum += d;
        sumsq += d * d;
        ++n;
      }
    const double mean = sum / static_cast<double>(n);
    core.sigma = std::sqrt(std::max(0.0, sumsq / static_cast<double>(n) - mean * mean));
  }
  core.zeta_unit = zeta_override
                       ? *zeta_override
                       : std::pow(static_cast<double>(n_post), 0.25) * core.sigma;
  core.zeta_time = 1e-6 * core.sigma;

  // unit weights: time-centered pre-period match of donors to the treated
  {
    Eigen::MatrixXd x(t0, J);
    for (long j = 0; j < J; ++j) {
      const Eigen::VectorXd col = donors.row(j).head(t0).transpose();
      x.col(j) = col.array() - col.mean();
    }
    Eigen::VectorXd y = treated.head(t0);
    y.array() -= y.mean();
    const Eigen::MatrixXd h =
        2.0 * (x.transpose() * x +
               core.zeta_unit * core.zeta_unit * static_cast<double>(t0) *
                   Eigen::MatrixXd::Identity(J, J));
    const Eigen::VectorXd c = -2.0 * x.transpose() * y;
    core.omega = solve_simplex_qp_form(h, c, solver).w;
  }

  // time weights: cross-donor match of pre years to the donor post mean
  {
    Eigen::MatrixXd z(J, t0);
    for (long s = 0; s < t0; ++s) {
      const Eigen::VectorXd col = donors.col(s);
      z.col(s) = col.array() - col.mean();
    }
    Eigen::VectorXd w = donors.rightCols(n_post).rowwise().mean();
    w.array() -= w.mean();
    const Eigen::MatrixXd h =
        2.0 * (z.transpose() * z +
               core.zeta_time * core.zeta_time * static_cast<double>(J) *
                   Eigen::MatrixXd::Identity(t0, t0));
    const Eigen::VectorXd c = -2.0 * z.transpose() * w;
    core.lambda = solve_simplex_qp_form(h, c, solver).w;
  }

  // weighted two-by-two: post mean minus lambda-weighted pre, treated minus
  // omega-weighted donors
  const double treated_post = treated.tail(n_post).mean();
  const double treated_pre = core.lambda.dot(treated.head(t0));
  double donor_term = 0.0;
  for (long j = 0; j < J; ++j) {
    const double post = donors.row(j).tail(n_post).mean();
    const double pre = core.lambda.dot(donors.row(j).head(t0).transpose());
    donor_term += core.omega(j) * (post - pre);
  }
  core.tau = (treated_post - treated_pre) - donor_term;
  return core;
}

} // namespace detail

// Synthetic difference-in-differences: donor weights from a ridge-regularized
// simplex match of pre-period trends, time weights from a simplex match of
// pre years to the post period, then the doubly-reweighted DiD contrast. The
// unit-weight ridge scale defaults to (#post)^(1/4) times the donor noise
// scale; `regularization` overrides it. Standard error comes from re-running
// the full procedure with each donor as a pseudo-treated unit against the
// remaining donors (the true treated unit left out) and taking the spread.
inline SdidResult fit_sdid(const PanelDataset& p, const TreatmentSpec& t,
                           const std::string& outcome,
                           std::optional<double> regularization = std::nullopt,
                           const SolverOptions& solver = {}) {
  const std::string op = "fit_sdid";
  const long T = p.n_years();
  const long t0 = t.treatment_year - p.first_year();
  const long J = static_cast<long>(t.donor_pool.size());
  if (t0 < 2) throw InsufficientPrePeriod("advanced", op, "need >= 2 pre years");
  if (T - t0 < 1) throw InvalidTreatment(op, "need >= 1 post year");
  if (J < 2) throw EmptyDonorPool(op, "need >= 2 donors");

  const auto& m = p.matrix(outcome);
  Eigen::MatrixXd donors(J, T);
  for (long j = 0; j < J; ++j)
    donors.row(j) = m.row(p.unit_index(t.donor_pool[static_cast<std::size_t>(j)]));
  const Eigen::VectorXd treated = m.row(p.unit_index(t.treated_unit)).transpose();

  const auto core = detail::sdid_weights(donors, treated, t0, regularization, solver);

  SdidResult out;
  out.tau = core.tau;
  out.zeta_unit = core.zeta_unit;
  out.zeta_time = core.zeta_time;
  out.noise_scale = core.sigma;
  for (long j = 0; j < J; ++j) {
    out.unit_weights[t.donor_pool[static_cast<std::size_t>(j)]] = core.omega(j);
    if (core.omega(j) > 1e-8) ++out.nonzero_unit_weights;
  }
  for (long s = 0; s < t0; ++s) {
    out.time_weights[p.first_year() + static_cast<int>(s)] = core.lambda(s);
    if (core.lambda(s) > 1e-8) ++out.nonzero_time_weights;
  }

  // donor-permutation placebo variance
  if (J >= 3) {
    std::vector<double> taus;
    for (long d = 0; d < J; ++d) {
      Eigen::MatrixXd sub(J - 1, T);
      long r = 0;
      for (long j = 0; j < J; ++j)
        if (j != d) sub.row(r++) = donors.row(j);
      const auto pd = detail::sdid_weights(sub, donors.row(d).transpose(), t0,
                                           regularization, solver);
      taus.push_back(pd.tau);
    }
    double mean = 0.0;
    for (double v : taus) mean += v;
    mean /= static_cast<double>(taus.size());
    double var = 0.0;
    for (double v : taus) var += (v - mean) * (v - mean);
    var /= static_cast<double>(taus.size() - 1); // sample variance
    out.standard_error = std::sqrt(var);
    out.n_placebo = static_cast<long>(taus.size());
  }
  out.ci95 = {out.tau - 1.96 * out.standard_error, out.tau + 1.96 * out.standard_error};
  out.p_value = normal_two_sided_p(out.tau, out.standard_error);
  return out;
}

} // namespace panelcf
