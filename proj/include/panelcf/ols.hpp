#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "panelcf/errors.hpp"

namespace panelcf {

struct OlsOptions {
  // Cluster ids per observation. Empty a => heteroskedasticity-robust (HC1).
  // a only => one-way clustering. a and b => two-way by inclusion-exclusion.
  std::vector<long> cluster_a;
  std::vector<long> cluster_b;
  // Parameters absorbed outside the design (e.g. demeaned fixed effects);
  // they enter the finite-sample degree-of-freedom corrections.
  long absorbed_params = 0;
};

struct OlsFit {
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd residuals;
  Eigen::VectorXd fitted;
  long nobs = 0;
  long rank = 0;
  double rss = 0.0;
  bool covariance_floored = false; // negative covariance eigenvalues clipped to 0
  bool singleton_clusters = false;

  double se(Eigen::Index j) const { return std::sqrt(std::max(covariance(j, j), 0.0)); }
};

namespace detail {

inline Eigen::MatrixXd cluster_meat(const Eigen::MatrixXd& x, const Eigen::VectorXd& e,
                                    const std::vector<long>& ids, long& n_groups,
                                    bool& singleton) {
  const auto k = x.cols();
  std::map<long, Eigen::VectorXd> scores;
  std::map<long, long> sizes;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    auto it = scores.find(ids[static_cast<std::size_t>(i)]);
    if (it == scores.end()) {
      scores.emplace(ids[static_cast<std::size_t>(i)], x.row(i).transpose() * e(i));
      sizes[ids[static_cast<std::size_t>(i)]] = 1;
    } else {
      it->second += x.row(i).transpose() * e(i);
      ++sizes[ids[static_cast<std::size_t>(i)]];
    }
  }
  n_groups = static_cast<long>(scores.size());
  for (const auto& [id, sz] : sizes)
    if (sz == 1) singleton = true;
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
  for (const auto& [id, s] : scores) meat += s * s.transpose();
  return meat;
}

// G/(G-1) * (N-1)/(N-K) small-sample factor used per clustering dimension.
inline double cluster_dof_factor(long n_groups, long n, long k_eff) {
  if (n_groups < 2 || n <= k_eff) return 1.0;
  return (static_cast<double>(n_groups) / static_cast<double>(n_groups - 1)) *
         (static_cast<double>(n - 1) / static_cast<double>(n - k_eff));
}

} // namespace detail

// Least squares with a sandwich covariance. Heteroskedasticity-robust by
// default (HC1 with N/(N-K)); one- or two-way cluster-robust when cluster ids
// are supplied. Two-way uses inclusion-exclusion (A + B - A∩B), each piece
// with its own group-count correction; if the combined matrix has negative
// eigenvalues they are floored at zero and flagged.
inline OlsFit ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const OlsOptions& opts = {},
                      const std::vector<std::string>& column_names = {}) {
  const auto n = x.rows();
  const auto k = x.cols();
  if (n == 0 || k == 0) throw EmptyInput("solvers", "ols_fit", "empty design");
  if (y.size() != n) throw DimensionMismatch("solvers", "ols_fit", "X/y rows");
  if (!x.allFinite() || !y.allFinite()) throw NonFiniteInput("solvers", "ols_fit");
  if (!opts.cluster_a.empty() && static_cast<Eigen::Index>(opts.cluster_a.size()) != n)
    throw DimensionMismatch("solvers", "ols_fit", "cluster_a length");
  if (!opts.cluster_b.empty() && static_cast<Eigen::Index>(opts.cluster_b.size()) != n)
    throw DimensionMismatch("solvers", "ols_fit", "cluster_b length");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  if (rank < k) {
    // Name the pivoted-out columns so the caller can see what collided.
    std::vector<std::string> bad;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = rank; i < k; ++i) {
      const auto col = perm(i);
      bad.push_back(col < static_cast<Eigen::Index>(column_names.size())
                        ? column_names[static_cast<std::size_t>(col)]
                        : "column " + std::to_string(col));
    }
    throw RankDeficient("ols_fit", std::move(bad));
  }

  OlsFit fit;
  fit.coefficients = qr.solve(y);
  fit.fitted = x * fit.coefficients;
  fit.residuals = y - fit.fitted;
  fit.rss = fit.residuals.squaredNorm();
  fit.nobs = n;
  fit.rank = rank;

  const long k_eff = static_cast<long>(k) + opts.absorbed_params;
  const Eigen::MatrixXd xtx_inv =
      (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(k, k));

  Eigen::MatrixXd cov;
  if (opts.cluster_a.empty()) {
    // HC1
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < n; ++i)
      meat += fit.residuals(i) * fit.residuals(i) * x.row(i).transpose() * x.row(i);
    const double factor =
        n > k_eff ? static_cast<double>(n) / static_cast<double>(n - k_eff) : 1.0;
    cov = factor * xtx_inv * meat * xtx_inv;
  } else if (opts.cluster_b.empty()) {
    long ga = 0;
    Eigen::MatrixXd meat =
        detail::cluster_meat(x, fit.residuals, opts.cluster_a, ga, fit.singleton_clusters);
    cov = detail::cluster_dof_factor(ga, n, k_eff) * xtx_inv * meat * xtx_inv;
  } else {
    long ga = 0, gb = 0, gab = 0;
    Eigen::MatrixXd meat_a =
        detail::cluster_meat(x, fit.residuals, opts.cluster_a, ga, fit.singleton_clusters);
    Eigen::MatrixXd meat_b =
        detail::cluster_meat(x, fit.residuals, opts.cluster_b, gb, fit.singleton_clusters);
    std::vector<long> inter(static_cast<std::size_t>(n));
    std::map<std::pair<long, long>, long> pair_ids;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto key = std::make_pair(opts.cluster_a[static_cast<std::size_t>(i)],
                                      opts.cluster_b[static_cast<std::size_t>(i)]);
      auto [it, fresh] = pair_ids.emplace(key, static_cast<long>(pair_ids.size()));
      inter[static_cast<std::size_t>(i)] = it->second;
    }
    bool inter_singleton = false; // intersection cells are usually singletons
    Eigen::MatrixXd meat_ab = detail::cluster_meat(x, fit.residuals, inter, gab, inter_singleton);
    cov = detail::cluster_dof_factor(ga, n, k_eff) * xtx_inv * meat_a * xtx_inv +
          detail::cluster_dof_factor(gb, n, k_eff) * xtx_inv * meat_b * xtx_inv -
          detail::cluster_dof_factor(gab, n, k_eff) * xtx_inv * meat_ab * xtx_inv;
    // Inclusion-exclusion can leave the difference indefinite.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.eigenvalues().minCoeff() < 0.0) {
      Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
      cov = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
      fit.covariance_floored = true;
    }
  }
  fit.covariance = 0.5 * (cov + cov.transpose()); // symmetrize rounding
  return fit;
}

} // namespace panelcf
