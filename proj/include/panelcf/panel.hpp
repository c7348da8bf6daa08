#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "panelcf/errors.hpp"
#include "panelcf/series.hpp"

namespace panelcf {

enum class VariableRole { outcome, covariate };

struct LongRow {
  std::string unit;
  int year = 0;
  std::string variable;
  double value = 0.0;
};

// Column mapping for the long-format reader. Logical columns are fixed
// (unit, year, variable, value); physical header names can differ.
struct CsvSchema {
  std::string unit_column = "unit";
  std::string year_column = "year";
  std::string variable_column = "variable";
  std::string value_column = "value";
  char delimiter = ',';
};

// Balanced unit-by-year panel over a set of named variables. Construction
// canonicalizes ordering (units and variables lexicographic, years ascending)
// and enforces balance, so downstream code can index matrices directly.
class PanelDataset {
public:
  PanelDataset() = default;

  static PanelDataset from_rows(const std::vector<LongRow>& rows,
                                const std::string& op = "load_panel") {
    if (rows.empty()) throw EmptyInput("panel", op, "no data rows");
    std::set<std::string> unit_set, var_set;
    int ymin = rows.front().year, ymax = rows.front().year;
    for (const auto& r : rows) {
      unit_set.insert(r.unit);
      var_set.insert(r.variable);
      ymin = std::min(ymin, r.year);
      ymax = std::max(ymax, r.year);
    }
    PanelDataset p;
    p.units_.assign(unit_set.begin(), unit_set.end());
    p.variables_.assign(var_set.begin(), var_set.end());
    p.start_year_ = ymin;
    p.n_years_ = ymax - ymin + 1;
    const auto n_units = static_cast<Eigen::Index>(p.units_.size());
    for (const auto& v : p.variables_) {
      p.data_[v] = Eigen::MatrixXd::Constant(n_units, p.n_years_,
                                             std::numeric_limits<double>::quiet_NaN());
      p.roles_[v] = VariableRole::outcome;
    }
    for (const auto& r : rows) {
      auto& m = p.data_[r.variable];
      const auto ui = p.unit_index(r.unit);
      const auto yi = r.year - ymin;
      if (!std::isnan(m(ui, yi))) throw DuplicateCell(r.unit, r.year, r.variable);
      m(ui, yi) = r.value;
    }
    // Balance check: every (unit, year, variable) cell must be present.
    std::vector<std::string> missing;
    for (const auto& v : p.variables_) {
      const auto& m = p.data_[v];
      for (Eigen::Index u = 0; u < n_units; ++u)
        for (int y = 0; y < p.n_years_; ++y)
          if (std::isnan(m(u, y)))
            missing.push_back(p.units_[static_cast<std::size_t>(u)] + "/" +
                              std::to_string(ymin + y) + "/" + v);
    }
    if (!missing.empty()) {
      std::string summary = std::to_string(missing.size()) + " missing cells (first: " +
                            missing.front() + ")";
      throw UnbalancedPanel(summary, std::move(missing));
    }
    return p;
  }

  static PanelDataset from_matrices(std::vector<std::string> units, int start_year,
                                    std::map<std::string, Eigen::MatrixXd> vars) {
    if (vars.empty()) throw EmptyInput("panel", "from_matrices", "no variables");
    PanelDataset p;
    // Canonical unit order is lexicographic; matrix rows follow the caller's
    // order, so permute them along with the names.
    std::vector<std::size_t> perm(units.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(),
              [&](std::size_t a, std::size_t b) { return units[a] < units[b]; });
    p.units_.reserve(units.size());
    for (auto i : perm) p.units_.push_back(units[i]);
    for (std::size_t i = 1; i < p.units_.size(); ++i)
      if (p.units_[i] == p.units_[i - 1])
        throw Error("panel", "from_matrices", "duplicate unit '" + p.units_[i] + "'");
    p.start_year_ = start_year;
    p.n_years_ = static_cast<int>(vars.begin()->second.cols());
    for (auto& [name, m] : vars) {
      if (m.rows() != static_cast<Eigen::Index>(p.units_.size()) ||
          m.cols() != p.n_years_)
        throw DimensionMismatch("panel", "from_matrices", "variable '" + name + "'");
      if (!m.allFinite()) throw NonFiniteInput("panel", "from_matrices");
      Eigen::MatrixXd sorted(m.rows(), m.cols());
      for (std::size_t i = 0; i < perm.size(); ++i)
        sorted.row(static_cast<Eigen::Index>(i)) =
            m.row(static_cast<Eigen::Index>(perm[i]));
      p.variables_.push_back(name);
      p.roles_[name] = VariableRole::outcome;
      p.data_[name] = std::move(sorted);
    }
    return p;
  }

  const std::vector<std::string>& units() const { return units_; }
  const std::vector<std::string>& variables() const { return variables_; }
  int first_year() const { return start_year_; }
  int last_year() const { return start_year_ + n_years_ - 1; }
  int n_years() const { return n_years_; }
  std::size_t n_units() const { return units_.size(); }

  bool has_unit(const std::string& u) const {
    return std::binary_search(units_.begin(), units_.end(), u);
  }
  bool has_variable(const std::string& v) const { return data_.count(v) > 0; }

  Eigen::Index unit_index(const std::string& u) const {
    auto it = std::lower_bound(units_.begin(), units_.end(), u);
    if (it == units_.end() || *it != u) throw UnknownUnit("unit_index", u);
    return static_cast<Eigen::Index>(it - units_.begin());
  }

  // units x years value matrix for one variable.
  const Eigen::MatrixXd& matrix(const std::string& v) const {
    auto it = data_.find(v);
    if (it == data_.end()) throw UnknownVariable("matrix", v);
    return it->second;
  }

  double value(const std::string& unit, int year, const std::string& var) const {
    if (year < first_year() || year > last_year())
      throw PeriodOutOfRange("value", "year " + std::to_string(year));
    return matrix(var)(unit_index(unit), year - start_year_);
  }

  YearSeries series(const std::string& unit, const std::string& var) const {
    const auto& m = matrix(var);
    YearSeries s;
    s.start_year = start_year_;
    const auto row = m.row(unit_index(unit));
    s.values.assign(row.begin(), row.end());
    return s;
  }

  VariableRole role(const std::string& v) const {
    auto it = roles_.find(v);
    if (it == roles_.end()) throw UnknownVariable("role", v);
    return it->second;
  }

  // Copy restricted to [first, last]; units, variables and roles carry over.
  PanelDataset subperiod(int first, int last) const {
    if (first < first_year() || last > last_year() || first > last)
      throw PeriodOutOfRange("subperiod", "[" + std::to_string(first) + ", " +
                                              std::to_string(last) + "] outside [" +
                                              std::to_string(first_year()) + ", " +
                                              std::to_string(last_year()) + "]");
    PanelDataset p;
    p.units_ = units_;
    p.variables_ = variables_;
    p.roles_ = roles_;
    p.start_year_ = first;
    p.n_years_ = last - first + 1;
    for (const auto& [name, m] : data_)
      p.data_[name] = m.middleCols(first - start_year_, p.n_years_);
    return p;
  }

  void assign_roles(const std::vector<std::string>& outcomes,
                    const std::vector<std::string>& covariates) {
    for (const auto& v : outcomes) {
      if (!has_variable(v)) throw UnknownVariable("assign_roles", v);
      roles_[v] = VariableRole::outcome;
    }
    for (const auto& v : covariates) {
      if (!has_variable(v)) throw UnknownVariable("assign_roles", v);
      roles_[v] = VariableRole::covariate;
    }
  }

  // Canonical long-format rows (unit, then year, then variable), the same
  // order the writer emits, so emit -> load round-trips to an identical panel.
  std::vector<LongRow> to_rows() const {
    std::vector<LongRow> rows;
    rows.reserve(units_.size() * static_cast<std::size_t>(n_years_) * variables_.size());
    for (const auto& u : units_) {
      const auto ui = unit_index(u);
      for (int y = 0; y < n_years_; ++y)
        for (const auto& v : variables_)
          rows.push_back({u, start_year_ + y, v, data_.at(v)(ui, y)});
    }
    return rows;
  }

private:
  std::vector<std::string> units_;
  std::vector<std::string> variables_;
  std::map<std::string, Eigen::MatrixXd> data_;
  std::map<std::string, VariableRole> roles_;
  int start_year_ = 0;
  int n_years_ = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline bool parse_int(const std::string& s, int& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  long v = std::strtol(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size()) return false;
  out = static_cast<int>(v);
  return true;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return false;
  out = v;
  return true;
}

inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace detail

// Reads long-format delimited text (header row required, '.' decimal mark).
// Row numbers in errors are 1-based and count the header.
inline PanelDataset load_panel(std::istream& in, const CsvSchema& schema = {}) {
  std::string line;
  long row_no = 0;
  if (!std::getline(in, line)) throw ParseError("load_panel", 1, "missing header");
  ++row_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_line(line, schema.delimiter);
  auto find_col = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<long>(i);
    throw ParseError("load_panel", 1, "column '" + name + "' not found in header");
  };
  const auto ci_unit = find_col(schema.unit_column);
  const auto ci_year = find_col(schema.year_column);
  const auto ci_var = find_col(schema.variable_column);
  const auto ci_val = find_col(schema.value_column);
  const auto max_ci = std::max({ci_unit, ci_year, ci_var, ci_val});

  std::vector<LongRow> rows;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_line(line, schema.delimiter);
    if (static_cast<long>(cells.size()) <= max_ci)
      throw ParseError("load_panel", row_no, "expected at least " +
                                                 std::to_string(max_ci + 1) + " columns");
    LongRow r;
    r.unit = cells[static_cast<std::size_t>(ci_unit)];
    r.variable = cells[static_cast<std::size_t>(ci_var)];
    if (r.unit.empty()) throw ParseError("load_panel", row_no, "empty unit id");
    if (r.variable.empty()) throw ParseError("load_panel", row_no, "empty variable name");
    if (!detail::parse_int(cells[static_cast<std::size_t>(ci_year)], r.year))
      throw ParseError("load_panel", row_no,
                       "bad year '" + cells[static_cast<std::size_t>(ci_year)] + "'");
    if (!detail::parse_double(cells[static_cast<std::size_t>(ci_val)], r.value))
      throw ParseError("load_panel", row_no,
                       "bad value '" + cells[static_cast<std::size_t>(ci_val)] + "'");
    if (!std::isfinite(r.value))
      throw ParseError("load_panel", row_no, "value not finite");
    rows.push_back(std::move(r));
  }
  return PanelDataset::from_rows(rows);
}

inline PanelDataset load_panel_file(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw Error("panel", "load_panel", "cannot open '" + path + "'");
  return load_panel(in, schema);
}

// Canonical long-format emission; parses back to an identical panel.
inline std::string panel_to_csv(const PanelDataset& p, const CsvSchema& schema = {}) {
  std::ostringstream out;
  const char d = schema.delimiter;
  out << schema.unit_column << d << schema.year_column << d << schema.variable_column
      << d << schema.value_column << "\n";
  for (const auto& r : p.to_rows())
    out << r.unit << d << r.year << d << r.variable << d
        << detail::format_value(r.value) << "\n";
  return out.str();
}

struct VariableSummary {
  std::string name;
  long n = 0;
  double min = 0.0, max = 0.0, mean = 0.0;
  bool constant = false;
};

struct ValidationReport {
  long row_count = 0;
  bool balance_ok = true;
  std::vector<VariableSummary> variables;
  std::vector<std::pair<std::string, std::string>> issues; // (severity, message)
};

inline ValidationReport validate_panel(const PanelDataset& p) {
  ValidationReport rep;
  rep.row_count = static_cast<long>(p.n_units()) * p.n_years() *
                  static_cast<long>(p.variables().size());
  for (const auto& v : p.variables()) {
    const auto& m = p.matrix(v);
    VariableSummary s;
    s.name = v;
    s.n = static_cast<long>(m.size());
    s.min = m.minCoeff();
    s.max = m.maxCoeff();
    s.mean = m.mean();
    s.constant = (s.max - s.min) == 0.0;
    if (s.constant)
      rep.issues.emplace_back("warning", "variable '" + v + "' is constant");
    if (!m.allFinite()) {
      rep.balance_ok = false;
      rep.issues.emplace_back("error", "variable '" + v + "' has non-finite cells");
    }
    rep.variables.push_back(s);
  }
  if (p.n_years() < 3)
    rep.issues.emplace_back("warning", "fewer than 3 years of data");
  return rep;
}

// Treated unit + treatment year + canonical (sorted) donor pool.
struct TreatmentSpec {
  std::string treated_unit;
  int treatment_year = 0;
  std::vector<std::string> donor_pool;
};

inline void check_treatment_window(const PanelDataset& p, const std::string& treated,
                                   int treatment_year, const std::string& op) {
  if (!p.has_unit(treated)) throw UnknownUnit(op, treated);
  if (treatment_year - p.first_year() < 2)
    throw InvalidTreatment(op, "need at least 2 pre-treatment years (first year " +
                                   std::to_string(p.first_year()) + ", treatment " +
                                   std::to_string(treatment_year) + ")");
  if (p.last_year() < treatment_year)
    throw InvalidTreatment(op, "need at least 1 post-treatment year");
}

// Builds a TreatmentSpec from an explicit donor list. The treated unit may
// not be listed as its own donor.
inline TreatmentSpec make_treatment(const PanelDataset& p, const std::string& treated,
                                    int treatment_year,
                                    const std::vector<std::string>& donors) {
  const std::string op = "restrict_donors";
  check_treatment_window(p, treated, treatment_year, op);
  std::set<std::string> pool;
  for (const auto& d : donors) {
    if (d == treated) throw TreatedInPool(treated);
    if (!p.has_unit(d)) throw UnknownUnit(op, d);
    pool.insert(d);
  }
  if (pool.empty()) throw EmptyDonorPool(op, "explicit donor list is empty");
  TreatmentSpec t;
  t.treated_unit = treated;
  t.treatment_year = treatment_year;
  t.donor_pool.assign(pool.begin(), pool.end());
  return t;
}

// One predictor row of the matching design: a variable observed in each
// period year (per_year) or averaged over the period (period mean).
struct PredictorSpec {
  std::string variable;
  bool per_year = true;
};

struct DesignMatrices {
  Eigen::VectorXd x_treated;          // K predictor values, treated unit
  Eigen::MatrixXd x_donors;           // K x J, column j = donor j
  Eigen::VectorXd outcome_treated;    // outcome path over the period
  Eigen::MatrixXd outcome_donors;     // |period| x J
  std::vector<std::string> predictor_labels;
  std::vector<std::string> donor_order;
  std::vector<int> period_years;
  std::string outcome;
};

// Assembles the matching design over `period` (a pre-treatment year range).
// Row order = predictor order; column order = canonical donor order.
inline DesignMatrices build_design(const PanelDataset& p, const TreatmentSpec& t,
                                   const std::string& outcome,
                                   const std::vector<PredictorSpec>& predictors,
                                   int period_first, int period_last) {
  const std::string op = "design_matrices";
  if (predictors.empty()) throw EmptyPredictorSet(op);
  if (!p.has_variable(outcome)) throw UnknownVariable(op, outcome);
  if (period_first > period_last)
    throw PeriodOutOfRange(op, "empty period");
  if (period_first < p.first_year() || period_last >= t.treatment_year)
    throw PeriodOutOfRange(op, "period [" + std::to_string(period_first) + ", " +
                                   std::to_string(period_last) +
                                   "] must lie inside the pre-treatment window");
  for (const auto& d : t.donor_pool)
    if (!p.has_unit(d)) throw UnknownUnit(op, d);

  DesignMatrices dm;
  dm.outcome = outcome;
  dm.donor_order = t.donor_pool;
  for (int y = period_first; y <= period_last; ++y) dm.period_years.push_back(y);
  const auto T = static_cast<Eigen::Index>(dm.period_years.size());
  const auto J = static_cast<Eigen::Index>(t.donor_pool.size());

  std::vector<std::pair<std::string, int>> row_spec; // (variable, year) — year<0 means mean
  for (const auto& ps : predictors) {
    if (!p.has_variable(ps.variable)) throw UnknownVariable(op, ps.variable);
    if (ps.per_year)
      for (int y : dm.period_years) row_spec.emplace_back(ps.variable, y);
    else
      row_spec.emplace_back(ps.variable, -1);
  }
  const auto K = static_cast<Eigen::Index>(row_spec.size());
  dm.x_treated.resize(K);
  dm.x_donors.resize(K, J);
  const auto ti = p.unit_index(t.treated_unit);
  const int y0 = p.first_year();
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& [var, year] = row_spec[static_cast<std::size_t>(k)];
    const auto& m = p.matrix(var);
    if (year >= 0) {
      dm.predictor_labels.push_back(var + ":" + std::to_string(year));
      dm.x_treated(k) = m(ti, year - y0);
      for (Eigen::Index j = 0; j < J; ++j)
        dm.x_donors(k, j) = m(p.unit_index(t.donor_pool[static_cast<std::size_t>(j)]), year - y0);
    } else {
      dm.predictor_labels.push_back(var + ":mean");
      const auto c0 = period_first - y0;
      dm.x_treated(k) = m.row(ti).segment(c0, T).mean();
      for (Eigen::Index j = 0; j < J; ++j)
        dm.x_donors(k, j) =
            m.row(p.unit_index(t.donor_pool[static_cast<std::size_t>(j)])).segment(c0, T).mean();
    }
  }

  const auto& om = p.matrix(outcome);
  dm.outcome_treated.resize(T);
  dm.outcome_donors.resize(T, J);
  for (Eigen::Index i = 0; i < T; ++i) {
    const int col = dm.period_years[static_cast<std::size_t>(i)] - y0;
    dm.outcome_treated(i) = om(ti, col);
    for (Eigen::Index j = 0; j < J; ++j)
      dm.outcome_donors(i, j) = om(p.unit_index(t.donor_pool[static_cast<std::size_t>(j)]), col);
  }
  return dm;
}

// Default design: the outcome observed at every pre-treatment year, plus the
// period mean of each covariate.
inline DesignMatrices build_default_design(const PanelDataset& p, const TreatmentSpec& t,
                                           const std::string& outcome,
                                           const std::vector<std::string>& covariates = {}) {
  std::vector<PredictorSpec> specs;
  specs.push_back({outcome, true});
  for (const auto& c : covariates) specs.push_back({c, false});
  return build_design(p, t, outcome, specs, p.first_year(), t.treatment_year - 1);
}

} // namespace panelcf
