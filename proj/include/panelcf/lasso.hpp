#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "panelcf/errors.hpp"
#include "panelcf/solver_options.hpp"

namespace panelcf {

struct LassoFit {
  Eigen::VectorXd coefficients; // slopes on the original variable scale
  double intercept = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Coordinate-descent tolerance: sweep stops when no coefficient moved more
// than this (in the standardized working space).
inline constexpr double kLassoCoefTol = 1e-9;

// Penalized least squares (1/2n)||y - a - Xb||^2 + lambda*||b||_1 with an
// unpenalized intercept, solved by cyclic coordinate descent. `standardize`
// scales columns to unit variance internally; coefficients are always
// reported on the original scale.
inline LassoFit lasso_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          double lambda, bool standardize = true,
                          const SolverOptions& opts = {}) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (n == 0 || p == 0) throw EmptyInput("solvers", "lasso_fit", "empty design");
  if (y.size() != n) throw DimensionMismatch("solvers", "lasso_fit", "X/y rows");
  if (!x.allFinite() || !y.allFinite()) throw NonFiniteInput("solvers", "lasso_fit");
  if (lambda < 0.0) throw Error("solvers", "lasso_fit", "negative lambda");

  const double dn = static_cast<double>(n);
  const Eigen::RowVectorXd xbar = x.colwise().mean();
  const double ybar = y.mean();
  Eigen::MatrixXd xc = x.rowwise() - xbar;
  const Eigen::VectorXd yc = y.array() - ybar;

  Eigen::VectorXd scale = Eigen::VectorXd::Ones(p);
  if (standardize) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double s = std::sqrt(xc.col(j).squaredNorm() / dn);
      if (s > 0.0) {
        scale(j) = s;
        xc.col(j) /= s;
      }
    }
  }
  // Per-column curvature (1/n) x_j'x_j; zero-variance columns stay at zero.
  Eigen::VectorXd curv(p);
  for (Eigen::Index j = 0; j < p; ++j) curv(j) = xc.col(j).squaredNorm() / dn;

  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd r = yc;
  auto soft = [](double z, double g) {
    if (z > g) return z - g;
    if (z < -g) return z + g;
    return 0.0;
  };

  LassoFit fit;
  int sweep = 0;
  for (; sweep < opts.max_iterations; ++sweep) {
    double max_delta = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (curv(j) <= 0.0) continue;
      const double rho = xc.col(j).dot(r) / dn + curv(j) * b(j);
      const double bj = soft(rho, lambda) / curv(j);
      const double delta = bj - b(j);
      if (delta != 0.0) {
        r -= xc.col(j) * delta;
        b(j) = bj;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (max_delta < kLassoCoefTol) {
      fit.converged = true;
      ++sweep;
      break;
    }
  }

  fit.iterations = sweep;
  fit.coefficients = (b.array() / scale.array()).matrix();
  fit.intercept = ybar - fit.coefficients.dot(xbar.transpose());
  return fit;
}

// Smallest penalty that zeroes every slope: max_j |x_j'(y - ybar)| / n over
// the (optionally standardized) centered design.
inline double lasso_kill_threshold(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   bool standardize = true) {
  const auto n = x.rows();
  const double dn = static_cast<double>(n);
  Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  if (standardize) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double s = std::sqrt(xc.col(j).squaredNorm() / dn);
      if (s > 0.0) xc.col(j) /= s;
    }
  }
  const Eigen::VectorXd yc = y.array() - y.mean();
  return (xc.transpose() * yc).cwiseAbs().maxCoeff() / dn;
}

} // namespace panelcf
