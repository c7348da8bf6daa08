#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "panelcf/errors.hpp"

namespace panelcf {

// Contiguous annual series: value i belongs to year start_year + i.
struct YearSeries {
  int start_year = 0;
  std::vector<double> values;

  int size() const { return static_cast<int>(values.size()); }
  int year_at(int i) const { return start_year + i; }
  int last_year() const { return start_year + size() - 1; }
  bool has_year(int year) const { return year >= start_year && year <= last_year(); }

  double at_year(int year) const {
    if (!has_year(year))
      throw PeriodOutOfRange("series", "year " + std::to_string(year) +
                                           " outside [" + std::to_string(start_year) +
                                           ", " + std::to_string(last_year()) + "]");
    return values[static_cast<std::size_t>(year - start_year)];
  }
};

// Actual-minus-counterfactual path with the treatment year marking the
// pre/post split: pre = years < treatment_year, post = years >= treatment_year.
struct GapSeries {
  YearSeries values;
  int treatment_year = 0;

  std::vector<double> pre_values() const {
    std::vector<double> out;
    for (int i = 0; i < values.size(); ++i)
      if (values.year_at(i) < treatment_year) out.push_back(values.values[i]);
    return out;
  }

  std::vector<double> post_values() const {
    std::vector<double> out;
    for (int i = 0; i < values.size(); ++i)
      if (values.year_at(i) >= treatment_year) out.push_back(values.values[i]);
    return out;
  }

  double post_mean() const {
    auto p = post_values();
    if (p.empty()) return 0.0;
    double s = 0.0;
    for (double v : p) s += v;
    return s / static_cast<double>(p.size());
  }
};

inline double rmse_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

} // namespace panelcf
