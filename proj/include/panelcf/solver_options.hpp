#pragma once

namespace panelcf {

// Shared tuning knobs for the iterative solvers. Defaults follow the
// reference configuration the estimators were validated under.
struct SolverOptions {
  // Largest tolerated constraint violation (as a fraction) before a returned
  // iterate is marked non-converged instead of feasible.
  double violation_tolerance = 0.05;
  int max_iterations = 1000;
  // Magnitude bound applied to iterates in solvers whose parameter space is
  // unbounded; simplex-constrained iterates never reach it.
  double variable_clip_bound = 10.0;
  double convergence_epsilon = 1e-8;
};

} // namespace panelcf
