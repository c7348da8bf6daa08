#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "panelcf/errors.hpp"

namespace panelcf {

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Sample variance (n-1 denominator).
inline double sample_variance(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(n - 1);
}

inline double sample_sd(const std::vector<double>& v) {
  return std::sqrt(sample_variance(v));
}

inline double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw DimensionMismatch("report", "pearson_r", "series lengths differ");
  const std::size_t n = x.size();
  if (n < 2) throw SeriesTooShort("report", "pearson_r", "need at least 2 points");
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0)
    throw ZeroVariance("report", "pearson_r", "one of the series");
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

// Two-sided p-value for H0: r = 0 via the t transform with n-2 df.
inline double pearson_p_value(double r, std::size_t n) {
  if (n < 3) return 1.0;
  const double df = static_cast<double>(n - 2);
  if (std::abs(r) >= 1.0) return 0.0;
  const double t = r * std::sqrt(df / (1.0 - r * r));
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

inline double chi_squared_sf(double x, double df) {
  if (!(x > 0.0)) return 1.0;
  if (!std::isfinite(x)) return 0.0;
  boost::math::chi_squared dist(df);
  return boost::math::cdf(boost::math::complement(dist, x));
}

inline double normal_sf(double z) {
  boost::math::normal dist;
  return boost::math::cdf(boost::math::complement(dist, z));
}

// Two-sided p under a normal reference; SE = 0 degenerates to {0, 1}.
inline double normal_two_sided_p(double estimate, double se) {
  if (!(se > 0.0)) return estimate == 0.0 ? 1.0 : 0.0;
  return 2.0 * normal_sf(std::abs(estimate) / se);
}

} // namespace panelcf
