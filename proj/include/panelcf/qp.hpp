#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "panelcf/errors.hpp"
#include "panelcf/solver_options.hpp"

namespace panelcf {

// min over the probability simplex of (x1 - X0 w)' V (x1 - X0 w).
struct SimplexQpProblem {
  Eigen::VectorXd x_treated;  // K
  Eigen::MatrixXd x_donors;   // K x J
  Eigen::MatrixXd v;          // K x K PSD predictor weight
};

struct SimplexQpSolution {
  Eigen::VectorXd w;
  double objective = 0.0;
  bool converged = false;
  // Set when the optimum is attained on a face with a flat direction, i.e.
  // other weight vectors achieve the same objective.
  bool non_unique = false;
  int iterations = 0;
};

namespace detail {

// Equality-constrained solve on the working set: minimize the restricted
// quadratic subject to the weights summing to one. Singular faces get a tiny
// deterministic ridge.
inline Eigen::VectorXd solve_face(const Eigen::MatrixXd& h, const Eigen::VectorXd& c,
                                  const std::vector<int>& support) {
  const auto s = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd kkt(s + 1, s + 1);
  Eigen::VectorXd rhs(s + 1);
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) kkt(i, j) = h(support[i], support[j]);
    kkt(i, s) = 1.0;
    kkt(s, i) = 1.0;
    rhs(i) = -c(support[i]);
  }
  kkt(s, s) = 0.0;
  rhs(s) = 1.0;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  Eigen::VectorXd sol;
  bool ok = false;
  if (lu.isInvertible()) {
    sol = lu.solve(rhs);
    ok = sol.allFinite();
  }
  if (!ok) {
    const double ridge = 1e-12 * (1.0 + kkt.topLeftCorner(s, s).cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < s; ++i) kkt(i, i) += ridge;
    sol = Eigen::FullPivLU<Eigen::MatrixXd>(kkt).solve(rhs);
  }
  return sol.head(s);
}

} // namespace detail

// General simplex-constrained convex QP: min 1/2 w'Hw + c'w, w >= 0, sum w = 1.
// Primal active-set method warm-started at the best vertex; faces are solved
// exactly, so a converged flag certifies KKT optimality up to tolerance.
inline SimplexQpSolution solve_simplex_qp_form(const Eigen::MatrixXd& h,
                                               const Eigen::VectorXd& c,
                                               const SolverOptions& opts = {}) {
  const auto n = h.rows();
  if (n == 0) throw EmptyInput("solvers", "solve_simplex_qp", "no variables");
  if (h.cols() != n || c.size() != n)
    throw DimensionMismatch("solvers", "solve_simplex_qp", "H/c shapes");
  if (!h.allFinite() || !c.allFinite())
    throw NonFiniteInput("solvers", "solve_simplex_qp");

  SimplexQpSolution out;
  out.w = Eigen::VectorXd::Zero(n);
  if (n == 1) {
    out.w(0) = 1.0;
    out.objective = 0.5 * h(0, 0) + c(0);
    out.converged = true;
    out.iterations = 0;
    return out;
  }

  auto objective = [&](const Eigen::VectorXd& w) {
    return 0.5 * w.dot(h * w) + c.dot(w);
  };

  // Warm start: cheapest single vertex (smallest index wins ties).
  Eigen::Index best = 0;
  double best_obj = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double o = 0.5 * h(j, j) + c(j);
    if (o < best_obj) {
      best_obj = o;
      best = j;
    }
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  w(best) = 1.0;
  std::vector<int> support{static_cast<int>(best)};

  const double grad_scale = 1.0 + h.cwiseAbs().maxCoeff() + c.cwiseAbs().maxCoeff();
  const double kkt_tol = std::max(1e-12, opts.convergence_epsilon) * grad_scale;

  int iter = 0;
  bool converged = false;
  for (; iter < opts.max_iterations; ++iter) {
    Eigen::VectorXd face = detail::solve_face(h, c, support);

    if (face.minCoeff() >= -1e-12) {
      // Feasible on the face: clip dust, renormalize, test global KKT.
      w.setZero();
      double sum = 0.0;
      for (std::size_t i = 0; i < support.size(); ++i) {
        const double v = std::max(face(static_cast<Eigen::Index>(i)), 0.0);
        w(support[i]) = v;
        sum += v;
      }
      if (sum > 0.0) w /= sum;

      const Eigen::VectorXd g = h * w + c;
      double nu = 0.0;
      double wsum = 0.0;
      for (int j : support) {
        nu += g(j) * w(j);
        wsum += w(j);
      }
      nu = wsum > 0.0 ? nu / wsum : g(support.front());

      Eigen::Index add = -1;
      double worst = -kkt_tol;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (std::find(support.begin(), support.end(), static_cast<int>(j)) !=
            support.end())
          continue;
        const double violation = g(j) - nu; // must be >= 0 at the optimum
        if (violation < worst) {
          worst = violation;
          add = j;
        }
      }
      if (add < 0) {
        converged = true;
        break;
      }
      support.push_back(static_cast<int>(add));
      std::sort(support.begin(), support.end());
    } else {
      // Step toward the face solution until the first weight hits zero,
      // then drop that index from the working set.
      Eigen::VectorXd target = Eigen::VectorXd::Zero(n);
      for (std::size_t i = 0; i < support.size(); ++i)
        target(support[i]) = face(static_cast<Eigen::Index>(i));
      const Eigen::VectorXd d = target - w;
      double alpha = 1.0;
      int blocker = -1;
      for (int j : support) {
        if (d(j) < -1e-16) {
          const double a = -w(j) / d(j);
          if (a < alpha - 1e-15) {
            alpha = a;
            blocker = j;
          }
        }
      }
      w += alpha * d;
      if (blocker >= 0) {
        w(blocker) = 0.0;
        support.erase(std::remove(support.begin(), support.end(), blocker),
                      support.end());
      }
      if (support.empty()) { // numerically impossible, but stay safe
        support.push_back(static_cast<int>(best));
        w.setZero();
        w(best) = 1.0;
      }
    }
  }

  out.w = w;
  out.iterations = iter;
  out.objective = objective(w);
  const double feas = std::abs(w.sum() - 1.0) + std::max(0.0, -w.minCoeff());
  out.converged = converged && feas <= opts.violation_tolerance;

  if (out.converged) {
    // Flat-direction probe: indices whose multiplier ties the support can
    // trade weight; a singular reduced Hessian over them means alternate
    // optima exist.
    const Eigen::VectorXd g = h * w + c;
    double nu = 0.0, wsum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (w(j) > 1e-8) {
        nu += g(j) * w(j);
        wsum += w(j);
      }
    if (wsum > 0.0) nu /= wsum;
    std::vector<int> tied;
    for (Eigen::Index j = 0; j < n; ++j)
      if (w(j) > 1e-8 || g(j) - nu <= kkt_tol) tied.push_back(static_cast<int>(j));
    if (tied.size() > 1) {
      const auto m = static_cast<Eigen::Index>(tied.size());
      Eigen::MatrixXd z(n, m - 1); // basis of sum-zero directions over tied set
      z.setZero();
      for (Eigen::Index i = 0; i + 1 < m; ++i) {
        z(tied[0], i) = 1.0;
        z(tied[static_cast<std::size_t>(i) + 1], i) = -1.0;
      }
      const Eigen::MatrixXd reduced = z.transpose() * h * z;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reduced);
      const double floor_tol = 1e-10 * (1.0 + reduced.cwiseAbs().maxCoeff());
      if (es.eigenvalues().minCoeff() < floor_tol) out.non_unique = true;
    }
  }
  return out;
}

// SCM form. Reported objective is the weighted matching discrepancy
// (x1 - X0 w)' V (x1 - X0 w).
inline SimplexQpSolution solve_simplex_qp(const SimplexQpProblem& prob,
                                          const SolverOptions& opts = {}) {
  const auto k = prob.x_treated.size();
  const auto j = prob.x_donors.cols();
  if (j == 0) throw EmptyInput("solvers", "solve_simplex_qp", "no donors");
  if (prob.x_donors.rows() != k || prob.v.rows() != k || prob.v.cols() != k)
    throw DimensionMismatch("solvers", "solve_simplex_qp", "X1/X0/V shapes");
  if (!prob.x_treated.allFinite() || !prob.x_donors.allFinite() || !prob.v.allFinite())
    throw NonFiniteInput("solvers", "solve_simplex_qp");

  const Eigen::MatrixXd vx0 = prob.v * prob.x_donors;
  const Eigen::MatrixXd h = 2.0 * prob.x_donors.transpose() * vx0;
  const Eigen::VectorXd c = -2.0 * vx0.transpose() * prob.x_treated;
  SimplexQpSolution sol = solve_simplex_qp_form(h, c, opts);
  const Eigen::VectorXd resid = prob.x_treated - prob.x_donors * sol.w;
  sol.objective = resid.dot(prob.v * resid);
  return sol;
}

} // namespace panelcf
