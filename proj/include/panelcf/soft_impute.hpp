#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <vector>

#include "panelcf/errors.hpp"
#include "panelcf/solver_options.hpp"

namespace panelcf {

using MaskMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct EmptyRowOrColumn : Error {
  EmptyRowOrColumn(std::string op, std::string detail)
      : Error("solvers", std::move(op), "fully missing " + std::move(detail)) {}
};

struct SoftImputeResult {
  // Observed entries copied from the input, missing entries imputed.
  Eigen::MatrixXd completed;
  // Final soft-thresholded low-rank estimate.
  Eigen::MatrixXd low_rank;
  int rank = 0;
  int iterations = 0;
  bool converged = false;
  // 1/2 ||P_obs(M - Mhat)||_F^2 + lambda * ||Mhat||_* recorded over the
  // final solve at the target lambda; non-increasing by construction.
  std::vector<double> objective_path;
};

namespace detail {

struct SvtStep {
  Eigen::MatrixXd estimate;
  int rank = 0;
  double nuclear = 0.0;
};

inline SvtStep svt(const Eigen::MatrixXd& z, double lambda) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd sv = svd.singularValues();
  SvtStep step;
  for (Eigen::Index s = 0; s < sv.size(); ++s) {
    sv(s) = std::max(sv(s) - lambda, 0.0);
    step.nuclear += sv(s);
    if (sv(s) > 1e-12 * (1.0 + sv(0))) ++step.rank;
  }
  step.estimate = svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
  return step;
}

} // namespace detail

// Nuclear-norm regularized completion: observed-entry replacement alternating
// with singular-value soft-thresholding until the relative squared-Frobenius
// change drops below convergence_epsilon. Small penalties are reached by
// warm-starting down a geometric lambda path (cold starts move O(lambda) per
// iteration and would stall); the returned diagnostics cover the final solve
// at the requested lambda.
inline SoftImputeResult soft_impute(const Eigen::MatrixXd& m, const MaskMatrix& observed,
                                    double lambda, const SolverOptions& opts = {}) {
  const auto rows = m.rows(), cols = m.cols();
  if (rows == 0 || cols == 0) throw EmptyInput("solvers", "soft_impute", "empty matrix");
  if (observed.rows() != rows || observed.cols() != cols)
    throw DimensionMismatch("solvers", "soft_impute", "mask shape");
  if (lambda < 0.0) throw Error("solvers", "soft_impute", "negative lambda");
  for (Eigen::Index i = 0; i < rows; ++i) {
    bool any = false;
    for (Eigen::Index j = 0; j < cols; ++j) any = any || observed(i, j);
    if (!any) throw EmptyRowOrColumn("soft_impute", "row " + std::to_string(i));
  }
  for (Eigen::Index j = 0; j < cols; ++j) {
    bool any = false;
    for (Eigen::Index i = 0; i < rows; ++i) any = any || observed(i, j);
    if (!any) throw EmptyRowOrColumn("soft_impute", "column " + std::to_string(j));
  }
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (observed(i, j) && !std::isfinite(m(i, j)))
        throw NonFiniteInput("solvers", "soft_impute");

  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(rows, cols);
  bool any_missing = false;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (observed(i, j)) z(i, j) = m(i, j);
      else any_missing = true;
    }

  auto refill = [&](const Eigen::MatrixXd& est) {
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        if (!observed(i, j)) z(i, j) = est(i, j);
  };
  auto fit_error = [&](const Eigen::MatrixXd& est) {
    double e = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        if (observed(i, j)) {
          const double d = m(i, j) - est(i, j);
          e += d * d;
        }
    return e;
  };

  const double sigma_max =
      Eigen::JacobiSVD<Eigen::MatrixXd>(z).singularValues()(0);

  SoftImputeResult out;
  int total_iter = 0;

  // Warm-start stages at decreasing penalties; skipped when the target
  // penalty already exceeds the zero-fill spectrum (full shrinkage case) or
  // nothing is missing.
  if (any_missing && lambda < 0.7 * sigma_max) {
    double stage = 0.7 * sigma_max;
    while (stage > lambda && total_iter < opts.max_iterations) {
      Eigen::MatrixXd prev = Eigen::MatrixXd::Zero(rows, cols);
      for (int it = 0; it < 50 && total_iter < opts.max_iterations; ++it, ++total_iter) {
        auto step = detail::svt(z, stage);
        const double change =
            (step.estimate - prev).squaredNorm() / std::max(prev.squaredNorm(), 1e-30);
        prev = step.estimate;
        refill(step.estimate);
        if (it > 0 && change < std::max(opts.convergence_epsilon, 1e-10)) break;
      }
      stage *= 0.7;
    }
  }

  // Final solve at the requested lambda with recorded objective.
  Eigen::MatrixXd est = Eigen::MatrixXd::Zero(rows, cols);
  int iter = 0;
  for (; iter < opts.max_iterations; ++iter, ++total_iter) {
    auto step = detail::svt(z, lambda);
    out.objective_path.push_back(0.5 * fit_error(step.estimate) +
                                 lambda * step.nuclear);
    const double change =
        (step.estimate - est).squaredNorm() / std::max(est.squaredNorm(), 1e-30);
    est = std::move(step.estimate);
    out.rank = step.rank;
    refill(est);
    if (iter > 0 && change < opts.convergence_epsilon) {
      out.converged = true;
      ++iter;
      ++total_iter;
      break;
    }
  }

  out.iterations = total_iter;
  out.low_rank = est;
  out.completed = z;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (observed(i, j)) out.completed(i, j) = m(i, j);
  return out;
}

// Fixed-rank variant (no shrinkage): iterate rank-r truncated SVD
// reconstruction of the filled matrix. Used where exact reproduction of a
// rank-deficient panel matters and soft-thresholding would bias entries.
inline SoftImputeResult hard_impute(const Eigen::MatrixXd& m, const MaskMatrix& observed,
                                    int rank, const SolverOptions& opts = {}) {
  const auto rows = m.rows(), cols = m.cols();
  if (rank < 1) throw Error("solvers", "hard_impute", "rank must be >= 1");
  if (observed.rows() != rows || observed.cols() != cols)
    throw DimensionMismatch("solvers", "hard_impute", "mask shape");

  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (observed(i, j)) z(i, j) = m(i, j);

  SoftImputeResult out;
  Eigen::MatrixXd est = Eigen::MatrixXd::Zero(rows, cols);
  int iter = 0;
  const int r = std::min<int>(rank, static_cast<int>(std::min(rows, cols)));
  for (; iter < opts.max_iterations; ++iter) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd next = svd.matrixU().leftCols(r) *
                           svd.singularValues().head(r).asDiagonal() *
                           svd.matrixV().leftCols(r).transpose();
    const double change = (next - est).squaredNorm() / std::max(est.squaredNorm(), 1e-30);
    est = std::move(next);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        if (!observed(i, j)) z(i, j) = est(i, j);
    if (iter > 0 && change < opts.convergence_epsilon) {
      out.converged = true;
      ++iter;
      break;
    }
  }
  out.iterations = iter;
  out.rank = r;
  out.low_rank = est;
  out.completed = z;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (observed(i, j)) out.completed(i, j) = m(i, j);
  return out;
}

} // namespace panelcf
