#pragma once

#include <map>
#include <string>
#include <utility>

namespace panelcf {

// Common shape for the imputation-style estimators (interactive fixed
// effects, plain two-way FE imputation, matrix completion).
struct AdvEstimate {
  double att = 0.0;
  double standard_error = 0.0;
  std::pair<double, double> ci95{0.0, 0.0};
  double p_value = 1.0;
  std::string method; // ife | fixed_effects | matrix_completion
  std::map<std::string, double> nuisance; // factor count, lambda, bootstrap size, ...
};

} // namespace panelcf
