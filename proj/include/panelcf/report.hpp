#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "panelcf/errors.hpp"
#include "panelcf/panel.hpp"
#include "panelcf/stats.hpp"

namespace panelcf {

struct CorrelationCell {
  double r = 0.0;
  double p_value = 1.0;
  long n = 0;
};

struct CorrelationReport {
  // keyed by the (series_a, series_b) pair as requested
  std::map<std::pair<std::string, std::string>, CorrelationCell> pairs;
};

// Pearson correlations over pooled unit-year observations. Cells where either
// series is non-finite are dropped from the pooled sample; each pair needs at
// least 3 overlapping observations. p-values are two-sided, from the t
// transform with n-2 degrees of freedom.
inline CorrelationReport cross_index_correlation(
    const PanelDataset& p,
    const std::vector<std::pair<std::string, std::string>>& var_pairs) {
  const std::string op = "cross_index_correlation";
  CorrelationReport out;
  for (const auto& [a, b] : var_pairs) {
    const auto& ma = p.matrix(a);
    const auto& mb = p.matrix(b);
    std::vector<double> xs, ys;
    for (Eigen::Index i = 0; i < ma.rows(); ++i)
      for (Eigen::Index j = 0; j < ma.cols(); ++j)
        if (std::isfinite(ma(i, j)) && std::isfinite(mb(i, j))) {
          xs.push_back(ma(i, j));
          ys.push_back(mb(i, j));
        }
    if (xs.size() < 3)
      throw InsufficientOverlap(op, a + " vs " + b + " has " +
                                        std::to_string(xs.size()) +
                                        " shared observations (need 3)");
    CorrelationCell cell;
    cell.n = static_cast<long>(xs.size());
    cell.r = pearson_r(xs, ys);
    cell.p_value = pearson_p_value(cell.r, xs.size());
    out.pairs[{a, b}] = cell;
  }
  return out;
}

struct CompositeResult {
  std::vector<std::string> variables;
  // loading per variable, aligned with `variables`; absolute values sum to 1
  // so the composite reads as a weighted average of the transformed inputs
  Eigen::VectorXd loadings;
  double explained_share = 0.0;
  // units x years composite scores; NaN where any input is missing
  Eigen::MatrixXd values;
  std::vector<std::string> units;
  int first_year = 0;
  std::string method; // "correlation" or "covariance"
};

// First principal component of the given variables over pooled unit-year
// observations. Default is correlation-matrix PCA (each variable standardized
// first); covariance = true switches to covariance-matrix PCA on centered
// inputs. Sign convention: the composite correlates positively with the
// equally-weighted mean of the (transformed) inputs; when that mean has no
// variance the loading of the lexicographically smallest variable with a
// non-zero loading is made positive, which keeps the result independent of
// the order the variables are passed in.
inline CompositeResult principal_composite(const PanelDataset& p,
                                           const std::vector<std::string>& variables,
                                           bool covariance = false) {
  const std::string op = "principal_composite";
  const auto k = static_cast<Eigen::Index>(variables.size());
  if (k < 2) throw EmptyInput("report", op, "need at least 2 variables");

  std::vector<const Eigen::MatrixXd*> mats;
  for (const auto& v : variables) mats.push_back(&p.matrix(v));
  const auto rows = mats[0]->rows(), cols = mats[0]->cols();

  // pooled rows = cells where every variable is observed
  std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      bool all = true;
      for (const auto* m : mats) all = all && std::isfinite((*m)(i, j));
      if (all) cells.emplace_back(i, j);
    }
  const auto n = static_cast<Eigen::Index>(cells.size());
  if (n < 3)
    throw InsufficientOverlap(op, "only " + std::to_string(n) +
                                      " complete observations (need 3)");

  Eigen::MatrixXd x(n, k);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < k; ++c)
      x(r, c) = (*mats[static_cast<std::size_t>(c)])(cells[static_cast<std::size_t>(r)].first,
                                                     cells[static_cast<std::size_t>(r)].second);

  Eigen::VectorXd mu(k), sd(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    mu(c) = x.col(c).mean();
    const double ss = (x.col(c).array() - mu(c)).square().sum();
    sd(c) = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd(c) > 0.0))
      throw ZeroVariance("report", op, variables[static_cast<std::size_t>(c)]);
  }

  Eigen::MatrixXd z = x.rowwise() - mu.transpose();
  if (!covariance) z.array().rowwise() /= sd.transpose().array();

  const Eigen::MatrixXd gram = z.transpose() * z / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  Eigen::VectorXd v = eig.eigenvectors().col(k - 1); // largest eigenvalue last
  const double total = eig.eigenvalues().sum();
  CompositeResult out;
  out.explained_share = total > 0.0 ? eig.eigenvalues()(k - 1) / total : 0.0;

  const Eigen::VectorXd scores = z * v;
  const Eigen::VectorXd bench = z.rowwise().mean();
  const double dot = scores.dot(bench);
  if (std::abs(dot) > 1e-12 * scores.norm() * std::max(bench.norm(), 1e-300)) {
    if (dot < 0.0) v = -v;
  } else {
    // benchmark degenerate: anchor on the lexicographically smallest variable
    std::vector<std::size_t> order(variables.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return variables[a] < variables[b];
    });
    for (std::size_t i : order)
      if (std::abs(v(static_cast<Eigen::Index>(i))) > 1e-12) {
        if (v(static_cast<Eigen::Index>(i)) < 0.0) v = -v;
        break;
      }
  }
  v /= v.lpNorm<1>(); // weighted-average scale: |loadings| sum to 1

  out.variables = variables;
  out.loadings = v;
  out.units = p.units();
  out.first_year = p.first_year();
  out.method = covariance ? "covariance" : "correlation";
  out.values = Eigen::MatrixXd::Constant(rows, cols,
                                         std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      bool all = true;
      for (const auto* m : mats) all = all && std::isfinite((*m)(i, j));
      if (!all) continue;
      double s = 0.0;
      for (Eigen::Index c = 0; c < k; ++c) {
        double zc = (*mats[static_cast<std::size_t>(c)])(i, j) - mu(c);
        if (!covariance) zc /= sd(c);
        s += zc * v(c);
      }
      out.values(i, j) = s;
    }
  return out;
}

} // namespace panelcf
