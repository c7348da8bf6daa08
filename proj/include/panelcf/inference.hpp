#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "panelcf/did.hpp"
#include "panelcf/parallel.hpp"
#include "panelcf/rng.hpp"
#include "panelcf/scm.hpp"
#include "panelcf/stats.hpp"

namespace panelcf {

// ---------------------------------------------------------------------------
// Placebo permutation across donors

struct PlaceboUnit {
  GapSeries gaps;
  double pre_rmse = 0.0;
  double post_rmse = 0.0;
  double rmse_ratio = 0.0;
  bool degenerate = false; // 0/0 ratio: unit fit its own path exactly everywhere
  bool failed = false;
  std::string failure;
};

struct PlaceboDistribution {
  std::map<std::string, PlaceboUnit> per_unit; // key: unit name
  std::string treated_unit;
  int treatment_year = 0;
};

// Post-period RMSE over pre-period RMSE. A perfect pre-fit with nonzero post
// divergence maps to +inf, which sorts above every finite ratio; an all-zero
// gap series maps to 0 so it can never top a ranking.
inline double rmse_ratio(const GapSeries& g) {
  const auto pre = g.pre_values();
  const auto post = g.post_values();
  if (pre.empty()) throw EmptyPeriod("rmse_ratio", "no pre-treatment years");
  if (post.empty()) throw EmptyPeriod("rmse_ratio", "no post-treatment years");
  const double pre_rmse = rmse_of(pre);
  const double post_rmse = rmse_of(post);
  if (pre_rmse == 0.0)
    return post_rmse == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return post_rmse / pre_rmse;
}

// Refits the synthetic control once per donor with treatment reassigned to
// it; the true treated unit joins that donor's pool. Fit failures are kept
// as marked entries rather than dropped.
inline PlaceboDistribution in_space_placebo(const PanelDataset& p, const TreatmentSpec& t,
                                            const std::string& outcome,
                                            const ScmOptions& opts = {}) {
  const std::string op = "in_space_placebo";
  if (t.donor_pool.size() < 2)
    throw EmptyDonorPool(op, "placebo permutation needs >= 2 donors");

  PlaceboDistribution dist;
  dist.treated_unit = t.treated_unit;
  dist.treatment_year = t.treatment_year;

  auto summarize = [](const ScmFit& fit) {
    PlaceboUnit u;
    u.gaps = fit.gaps;
    u.pre_rmse = fit.pre_rmse;
    u.post_rmse = fit.post_rmse;
    if (u.pre_rmse == 0.0) {
      u.degenerate = u.post_rmse == 0.0;
      u.rmse_ratio =
          u.degenerate ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
      u.rmse_ratio = u.post_rmse / u.pre_rmse;
    }
    return u;
  };

  dist.per_unit[t.treated_unit] = summarize(fit_synthetic_control(p, t, outcome, opts));

  std::vector<PlaceboUnit> donor_results(t.donor_pool.size());
  parallel_for(t.donor_pool.size(), opts.threads, [&](std::size_t i) {
    TreatmentSpec pt;
    pt.treated_unit = t.donor_pool[i];
    pt.treatment_year = t.treatment_year;
    pt.donor_pool.push_back(t.treated_unit);
    for (std::size_t j = 0; j < t.donor_pool.size(); ++j)
      if (j != i) pt.donor_pool.push_back(t.donor_pool[j]);
    std::sort(pt.donor_pool.begin(), pt.donor_pool.end());
    try {
      donor_results[i] = summarize(fit_synthetic_control(p, pt, outcome, opts));
    } catch (const std::exception& e) {
      donor_results[i].failed = true;
      donor_results[i].failure = e.what();
    }
  });
  for (std::size_t i = 0; i < t.donor_pool.size(); ++i)
    dist.per_unit[t.donor_pool[i]] = std::move(donor_results[i]);
  return dist;
}

// Permutation p-value: share of units (treated included) whose post/pre RMSE
// ratio is at least the treated unit's. Ties count, so p >= 1/(J+1) always.
inline double placebo_p_value(const PlaceboDistribution& d) {
  if (d.per_unit.empty()) throw EmptyInput("inference", "placebo_p_value", "no units");
  const auto it = d.per_unit.find(d.treated_unit);
  if (it == d.per_unit.end() || it->second.failed)
    throw EmptyInput("inference", "placebo_p_value", "treated unit missing");
  const double treated_ratio = it->second.rmse_ratio;
  long count = 0, total = 0;
  for (const auto& [name, u] : d.per_unit) {
    if (u.failed) continue;
    ++total;
    if (u.rmse_ratio >= treated_ratio) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(total);
}

// Permutation p-value recomputed on expanding post windows: entry k uses only
// the first k post-treatment years, giving the p-versus-years-elapsed path.
inline std::vector<std::pair<int, double>>
placebo_p_value_path(const PlaceboDistribution& d) {
  const auto it = d.per_unit.find(d.treated_unit);
  if (it == d.per_unit.end() || it->second.failed)
    throw EmptyInput("inference", "placebo_p_value_path", "treated unit missing");
  const int n_post = static_cast<int>(it->second.gaps.post_values().size());

  std::vector<std::pair<int, double>> path;
  for (int k = 1; k <= n_post; ++k) {
    auto windowed_ratio = [&](const PlaceboUnit& u) {
      std::vector<double> w;
      const auto& g = u.gaps;
      for (int i = 0; i < g.values.size(); ++i) {
        const int year = g.values.year_at(i);
        if (year >= d.treatment_year && year < d.treatment_year + k)
          w.push_back(g.values.values[i]);
      }
      const double post = rmse_of(w);
      if (u.pre_rmse == 0.0)
        return post == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
      return post / u.pre_rmse;
    };
    const double treated_ratio = windowed_ratio(it->second);
    long count = 0, total = 0;
    for (const auto& [name, u] : d.per_unit) {
      if (u.failed) continue;
      ++total;
      if (windowed_ratio(u) >= treated_ratio) ++count;
    }
    path.emplace_back(k, static_cast<double>(count) / static_cast<double>(total));
  }
  return path;
}

// ---------------------------------------------------------------------------
// Two-sample Kolmogorov–Smirnov

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool exact = false; // exact permutation path count vs asymptotic series
};

namespace detail {

// Probability that a uniformly random interleaving of n and m observations
// keeps every partial ECDF difference strictly below d. Lattice-path count:
// right-steps consume sample a, up-steps consume sample b.
inline double ks_paths_below(long n, long m, double d) {
  std::vector<double> col(static_cast<std::size_t>(m + 1), 0.0);
  const double eps = 1e-12;
  auto inside = [&](long i, long j) {
    const double dev = std::abs(static_cast<double>(i) / static_cast<double>(n) -
                                static_cast<double>(j) / static_cast<double>(m));
    return dev < d - eps;
  };
  col[0] = 1.0;
  for (long j = 1; j <= m; ++j) col[static_cast<std::size_t>(j)] =
      inside(0, j) ? col[static_cast<std::size_t>(j - 1)] : 0.0;
  for (long i = 1; i <= n; ++i) {
    std::vector<double> next(static_cast<std::size_t>(m + 1), 0.0);
    next[0] = inside(i, 0) ? col[0] : 0.0;
    for (long j = 1; j <= m; ++j)
      next[static_cast<std::size_t>(j)] =
          inside(i, j) || (i == n && j == m)
              ? next[static_cast<std::size_t>(j - 1)] + col[static_cast<std::size_t>(j)]
              : 0.0;
    col = std::move(next);
  }
  // divide by C(n+m, n) computed multiplicatively
  double total = 1.0;
  for (long i = 1; i <= n; ++i)
    total *= static_cast<double>(m + i) / static_cast<double>(i);
  return col[static_cast<std::size_t>(m)] / total;
}

inline double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-14) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

} // namespace detail

// D = sup |F_a - F_b| over the pooled values. The p-value is an exact
// permutation count when n*m <= 10,000 and the pooled sample is tie-free;
// otherwise the asymptotic Kolmogorov series at sqrt(nm/(n+m))*D.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw EmptyInput("inference", "ks_two_sample", "both samples must be non-empty");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const long n = static_cast<long>(a.size());
  const long m = static_cast<long>(b.size());

  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(n) -
                             static_cast<double>(j) / static_cast<double>(m)));
  }
  // once one sample is exhausted its ECDF sits at 1 and the other only climbs
  // toward it, so the supremum was recorded inside the loop

  KsResult r;
  r.statistic = d;
  if (d == 0.0) {
    r.p_value = 1.0;
    r.exact = n * m <= 10000;
    return r;
  }

  bool tie_free = true;
  {
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    for (std::size_t q = 1; q < pooled.size(); ++q)
      if (pooled[q] == pooled[q - 1]) tie_free = false;
  }
  if (n * m <= 10000 && tie_free) {
    r.exact = true;
    r.p_value = std::clamp(1.0 - detail::ks_paths_below(n, m, d), 0.0, 1.0);
  } else {
    r.exact = false;
    const double ne = static_cast<double>(n) * static_cast<double>(m) /
                      static_cast<double>(n + m);
    r.p_value = detail::kolmogorov_sf(std::sqrt(ne) * d);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Parametric placebo DiD with random donor sampling

struct ParametricPlaceboResult {
  DidEstimate estimate;          // treated x post coefficient on the stacked gap panel
  long n_samples = 0;
  double sampling_p_value = 1.0; // share of random placebo DiDs at least as large
  double sampling_sd = 0.0;      // spread of the random placebo DiD draws
  KsResult ks;                   // treated vs pooled placebo post-period gaps
};

// Stacks the treated gap series against every donor's placebo gap series and
// regresses on the treated-and-post interaction with unit and year effects
// (two-way clustered errors). On top of that single regression, n_samples
// random donor samples — pseudo-treated drawn uniformly, controls drawn with
// replacement from the rest — each yield a closed-form group-mean DiD; the
// empirical share at least as large in magnitude as the actual interaction
// gives a persistence p-value. Sample s always uses its own counter-seeded
// stream, so any thread count reproduces the same bits.
inline ParametricPlaceboResult parametric_placebo_did(const PanelDataset& p,
                                                      const TreatmentSpec& t,
                                                      const std::string& outcome,
                                                      long n_samples, std::uint64_t seed,
                                                      const ScmOptions& opts = {}) {
  const std::string op = "parametric_placebo_did";
  if (n_samples < 1) throw EmptyInput("inference", op, "n_samples must be >= 1");

  const PlaceboDistribution dist = in_space_placebo(p, t, outcome, opts);

  std::vector<std::string> units;
  for (const auto& [name, u] : dist.per_unit)
    if (!u.failed) units.push_back(name);
  if (units.size() < 3)
    throw EmptyDonorPool(op, "fewer than 2 donors produced placebo fits");

  const auto& treated_gaps = dist.per_unit.at(t.treated_unit).gaps;
  const int first_year = treated_gaps.values.start_year;
  const int n_years = treated_gaps.values.size();

  Eigen::MatrixXd g(static_cast<Eigen::Index>(units.size()), n_years);
  for (std::size_t u = 0; u < units.size(); ++u) {
    const auto& vals = dist.per_unit.at(units[u]).gaps.values.values;
    for (int y = 0; y < n_years; ++y)
      g(static_cast<Eigen::Index>(u), y) = vals[static_cast<std::size_t>(y)];
  }
  std::map<std::string, Eigen::MatrixXd> vars{{"gap", std::move(g)}};
  const PanelDataset gap_panel = PanelDataset::from_matrices(units, first_year, vars);

  TreatmentSpec gt;
  gt.treated_unit = t.treated_unit;
  gt.treatment_year = t.treatment_year;
  for (const auto& u : units)
    if (u != t.treated_unit) gt.donor_pool.push_back(u);
  std::sort(gt.donor_pool.begin(), gt.donor_pool.end());

  ParametricPlaceboResult out;
  out.estimate = fit_twfe_did(gap_panel, gt, "gap");
  out.estimate.notes = "stacked placebo-gap panel";
  out.n_samples = n_samples;

  // per-unit pre/post gap means drive the closed-form draws
  const std::size_t nd = gt.donor_pool.size();
  std::vector<double> delta(nd); // donor post-minus-pre gap means
  double delta_treated = 0.0;
  {
    auto post_minus_pre = [&](const PlaceboUnit& u) {
      const auto pre = u.gaps.pre_values();
      const auto post = u.gaps.post_values();
      return mean_of(post) - mean_of(pre);
    };
    for (std::size_t i = 0; i < nd; ++i)
      delta[i] = post_minus_pre(dist.per_unit.at(gt.donor_pool[i]));
    delta_treated = post_minus_pre(dist.per_unit.at(t.treated_unit));
  }
  const double actual = delta_treated - mean_of(delta);

  std::vector<std::uint8_t> hits(static_cast<std::size_t>(n_samples));
  std::vector<double> draws(static_cast<std::size_t>(n_samples));
  parallel_for(static_cast<std::size_t>(n_samples), opts.threads, [&](std::size_t s) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(s));
    const std::size_t star = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(nd)));
    double control_sum = 0.0;
    const std::size_t n_controls = nd - 1;
    for (std::size_t c = 0; c < n_controls; ++c) {
      std::size_t pick =
          static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(nd - 1)));
      if (pick >= star) ++pick; // skip the pseudo-treated slot
      control_sum += delta[pick];
    }
    const double did_s = delta[star] - control_sum / static_cast<double>(n_controls);
    draws[s] = did_s;
    hits[s] = std::abs(did_s) >= std::abs(actual) ? 1 : 0;
  });
  long count = 0;
  for (auto h : hits) count += h;
  out.sampling_p_value = static_cast<double>(count + 1) / static_cast<double>(n_samples + 1);
  out.sampling_sd = draws.size() > 1 ? std::sqrt(sample_variance(draws)) : 0.0;

  std::vector<double> treated_post = dist.per_unit.at(t.treated_unit).gaps.post_values();
  std::vector<double> donor_post;
  for (const auto& d : gt.donor_pool) {
    const auto v = dist.per_unit.at(d).gaps.post_values();
    donor_post.insert(donor_post.end(), v.begin(), v.end());
  }
  out.ks = ks_two_sample(std::move(treated_post), std::move(donor_post));
  return out;
}

// ---------------------------------------------------------------------------
// Structural break tests

struct BreakTestResult {
  double statistic = 0.0;
  int break_year = 0;         // 0 when no candidate year exists
  double p_value = 1.0;       // chi-squared p for trend tests; bracketed level
                              // (0.01/0.05/0.10/1.0) for the unit-root test
  double p_value_upper = 1.0; // Bonferroni bound for unknown-break sup tests
  std::string mode;
  bool significant_5pct = false;
};

enum class ZaMode { intercept, trend, both };

namespace detail {

// classical-variance t statistic for one coefficient of a small regression
inline double classic_tstat(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            Eigen::Index coef) {
  const Eigen::MatrixXd xtx = x.transpose() * x;
  const Eigen::VectorXd b = xtx.ldlt().solve(x.transpose() * y);
  const double rss = (y - x * b).squaredNorm();
  const double dof = static_cast<double>(x.rows() - x.cols());
  if (dof <= 0) return 0.0;
  const Eigen::MatrixXd inv = xtx.ldlt().solve(
      Eigen::MatrixXd::Identity(x.cols(), x.cols()));
  const double var = rss / dof * inv(coef, coef);
  return var > 0 ? b(coef) / std::sqrt(var) : 0.0;
}

// straight-line residual sum of squares of y on [1, x]
inline double line_rss(const std::vector<double>& xs, const std::vector<double>& ys,
                       std::size_t lo, std::size_t hi) {
  const double n = static_cast<double>(hi - lo);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double det = n * sxx - sx * sx;
  if (det <= 0) return 0.0;
  const double slope = (n * sxy - sx * sy) / det;
  const double icept = (sy - slope * sx) / n;
  double rss = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double e = ys[i] - icept - slope * xs[i];
    rss += e * e;
  }
  return rss;
}

} // namespace detail

// Minimum-t unit-root test against the alternative of stationarity around a
// one-time break: for every candidate year the first-difference regression
// dy_t = mu + beta*t + theta*1{t>=b} [+ gamma*(t-b+1)1{t>=b}] + alpha*y_{t-1}
// is fit and the t statistic on alpha recorded; the candidate minimizing it
// is the break. Break year means the first year of the new regime. Candidates
// span the trimmed interior (15% per side by default). Significance comes
// from the published asymptotic critical values for this statistic
// (Zivot-Andrews), embedded below; p_value is the bracketed level.
inline BreakTestResult zivot_andrews_break(const YearSeries& s, ZaMode mode = ZaMode::both,
                                           double trim = 0.15) {
  const std::string op = "zivot_andrews_break";
  const long T = s.size();
  if (T < 10) throw SeriesTooShort("inference", op, "need >= 10 observations");

  const long lo = std::max<long>(2, static_cast<long>(std::ceil(trim * T)));
  const long hi = std::min<long>(T - 2, static_cast<long>(std::floor((1.0 - trim) * T)));
  if (lo > hi) throw SeriesTooShort("inference", op, "trimmed interior is empty");

  const long n = T - 1; // regression rows, t = 1..T-1 (0-based)
  const int k_extra = mode == ZaMode::both ? 2 : 1;
  Eigen::MatrixXd x(n, 3 + k_extra);
  Eigen::VectorXd y(n);
  const auto& v = s.values;
  for (long t = 1; t < T; ++t) {
    y(t - 1) = v[static_cast<std::size_t>(t)] - v[static_cast<std::size_t>(t - 1)];
    x(t - 1, 0) = 1.0;
    x(t - 1, 1) = static_cast<double>(t);
    x(t - 1, 2) = v[static_cast<std::size_t>(t - 1)]; // alpha column
  }

  BreakTestResult r;
  r.mode = mode == ZaMode::both ? "both" : (mode == ZaMode::intercept ? "intercept" : "trend");
  r.statistic = std::numeric_limits<double>::infinity();
  for (long b = lo; b <= hi; ++b) {
    for (long t = 1; t < T; ++t) {
      const bool on = t >= b;
      if (mode == ZaMode::intercept) {
        x(t - 1, 3) = on ? 1.0 : 0.0;
      } else if (mode == ZaMode::trend) {
        x(t - 1, 3) = on ? static_cast<double>(t - b + 1) : 0.0;
      } else {
        x(t - 1, 3) = on ? 1.0 : 0.0;
        x(t - 1, 4) = on ? static_cast<double>(t - b + 1) : 0.0;
      }
    }
    const double tstat = detail::classic_tstat(x, y, 2);
    if (tstat < r.statistic) {
      r.statistic = tstat;
      r.break_year = s.start_year + static_cast<int>(b);
    }
  }

  // asymptotic 1/5/10% critical values for the minimum-t statistic
  // (Zivot & Andrews, J. Business & Economic Statistics 1992, Tables 2-4)
  double cv1, cv5, cv10;
  switch (mode) {
    case ZaMode::intercept: cv1 = -5.34; cv5 = -4.80; cv10 = -4.58; break;
    case ZaMode::trend:     cv1 = -4.93; cv5 = -4.42; cv10 = -4.11; break;
    default:                cv1 = -5.57; cv5 = -5.08; cv10 = -4.82; break;
  }
  r.p_value = r.statistic <= cv1 ? 0.01
              : r.statistic <= cv5 ? 0.05
              : r.statistic <= cv10 ? 0.10
                                    : 1.0;
  r.significant_5pct = r.statistic <= cv5;
  r.p_value_upper = r.p_value;
  return r;
}

// Backdates the intervention: the panel is cut off just before the true
// treatment year and the synthetic control refit as if treatment had begun
// at placebo_year. Divergence after a fake date indicates spurious fit.
inline ScmFit in_time_placebo(const PanelDataset& p, const TreatmentSpec& t,
                              const std::string& outcome, int placebo_year,
                              const ScmOptions& opts = {}) {
  const std::string op = "in_time_placebo";
  if (placebo_year >= t.treatment_year)
    throw InsufficientPrePeriod("inference", op,
                                "placebo year must precede the true treatment year");
  if (placebo_year - p.first_year() < 2)
    throw InsufficientPrePeriod("inference", op,
                                "need >= 2 years before the placebo year");
  const PanelDataset cut = p.subperiod(p.first_year(), t.treatment_year - 1);
  TreatmentSpec pt = t;
  pt.treatment_year = placebo_year;
  return fit_synthetic_control(cut, pt, outcome, opts);
}

// Chow-style joint equality of level and slope of the gap path across a
// break: W = (RSS_r - RSS_u) / (RSS_u / (n - 4)) against chi-squared(2).
// A noiseless fit on both sides (RSS_u = 0) maps to +inf when the pooled fit
// is worse and to 0 when the whole series is one line.
inline BreakTestResult differential_trend_test(const GapSeries& g, int known_break_year) {
  const std::string op = "differential_trend_test";
  const auto& vals = g.values.values;
  const std::size_t n = vals.size();
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i)
    xs[i] = static_cast<double>(g.values.start_year) + static_cast<double>(i);

  const long split = known_break_year - g.values.start_year;
  if (split < 2 || static_cast<long>(n) - split < 2)
    throw SeriesTooShort("inference", op, "need >= 2 points on each side of the break");

  const double rss_u = detail::line_rss(xs, vals, 0, static_cast<std::size_t>(split)) +
                       detail::line_rss(xs, vals, static_cast<std::size_t>(split), n);
  const double rss_r = detail::line_rss(xs, vals, 0, n);

  BreakTestResult r;
  r.mode = "known_break";
  r.break_year = known_break_year;
  const double tiny = 1e-12 * (1.0 + rss_r);
  if (rss_u <= tiny) {
    r.statistic = rss_r <= tiny ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    r.statistic = (rss_r - rss_u) / (rss_u / static_cast<double>(n - 4));
    if (r.statistic < 0) r.statistic = 0; // guard fp noise
  }
  r.p_value = std::isinf(r.statistic) ? 0.0 : chi_squared_sf(r.statistic, 2);
  r.p_value_upper = r.p_value;
  r.significant_5pct = r.p_value <= 0.05;
  return r;
}

// Unknown-break variant: supremum of the known-break statistic over the
// trimmed interior. The reported p-values bracket the truth: p_value is the
// pointwise chi-squared(2) tail (anti-conservative for a searched break) and
// p_value_upper the Bonferroni bound over the candidate count.
inline BreakTestResult differential_trend_test(const GapSeries& g, double trim = 0.15) {
  const std::string op = "differential_trend_test";
  const long n = static_cast<long>(g.values.values.size());
  if (n < 5) throw SeriesTooShort("inference", op, "need >= 5 observations");
  const long lo = std::max<long>(2, static_cast<long>(std::ceil(trim * n)));
  const long hi = std::min<long>(n - 2, static_cast<long>(std::floor((1.0 - trim) * n)));
  if (lo > hi) throw SeriesTooShort("inference", op, "trimmed interior is empty");

  BreakTestResult best;
  best.mode = "unknown_break";
  best.statistic = -1.0;
  long n_candidates = 0;
  for (long b = lo; b <= hi; ++b) {
    ++n_candidates;
    const auto r = differential_trend_test(g, g.values.start_year + static_cast<int>(b));
    if (r.statistic > best.statistic) {
      best.statistic = r.statistic;
      best.break_year = r.break_year;
    }
  }
  best.p_value = std::isinf(best.statistic) ? 0.0 : chi_squared_sf(best.statistic, 2);
  best.p_value_upper = std::min(1.0, best.p_value * static_cast<double>(n_candidates));
  best.significant_5pct = best.p_value_upper <= 0.05;
  best.mode = "unknown_break";
  return best;
}

} // namespace panelcf
