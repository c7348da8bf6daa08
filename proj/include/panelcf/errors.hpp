#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace panelcf {

// Base for every library error. `module_name` / `operation` let callers emit
// structured "module=... op=... cause=..." diagnostics without string parsing.
class Error : public std::runtime_error {
public:
  Error(std::string module_name, std::string operation, std::string cause)
      : std::runtime_error("module=" + module_name + " op=" + operation +
                           " cause=" + cause),
        module_(std::move(module_name)), op_(std::move(operation)),
        cause_(std::move(cause)) {}

  const std::string& module_name() const noexcept { return module_; }
  const std::string& operation() const noexcept { return op_; }
  const std::string& cause() const noexcept { return cause_; }

private:
  std::string module_, op_, cause_;
};

struct ParseError : Error {
  ParseError(std::string op, long row, std::string detail)
      : Error("panel", std::move(op),
              "parse error at row " + std::to_string(row) + ": " + detail),
        row(row) {}
  long row;
};

struct DuplicateCell : Error {
  DuplicateCell(std::string unit, int year, std::string variable)
      : Error("panel", "load_panel",
              "duplicate cell (" + unit + ", " + std::to_string(year) + ", " +
                  variable + ")") {}
};

struct UnbalancedPanel : Error {
  UnbalancedPanel(std::string summary, std::vector<std::string> missing)
      : Error("panel", "load_panel", "unbalanced panel: " + summary),
        missing_cells(std::move(missing)) {}
  std::vector<std::string> missing_cells;
};

struct UnknownUnit : Error {
  UnknownUnit(std::string op, const std::string& unit)
      : Error("panel", std::move(op), "unknown unit '" + unit + "'") {}
};

struct UnknownVariable : Error {
  UnknownVariable(std::string op, const std::string& var)
      : Error("panel", std::move(op), "unknown variable '" + var + "'") {}
};

struct TreatedInPool : Error {
  explicit TreatedInPool(const std::string& unit)
      : Error("panel", "restrict_donors",
              "treated unit '" + unit + "' appears in explicit donor list") {}
};

struct EmptyDonorPool : Error {
  EmptyDonorPool(std::string op, std::string detail)
      : Error("panel", std::move(op), "empty donor pool: " + std::move(detail)) {}
};

struct PeriodOutOfRange : Error {
  PeriodOutOfRange(std::string op, std::string detail)
      : Error("panel", std::move(op), "period out of range: " + std::move(detail)) {}
};

struct EmptyPeriod : Error {
  EmptyPeriod(std::string op, std::string detail)
      : Error("inference", std::move(op), "empty period: " + std::move(detail)) {}
};

struct EmptyPredictorSet : Error {
  explicit EmptyPredictorSet(std::string op)
      : Error("panel", std::move(op), "predictor set is empty") {}
};

struct InvalidTreatment : Error {
  InvalidTreatment(std::string op, std::string detail)
      : Error("panel", std::move(op), std::move(detail)) {}
};

struct DimensionMismatch : Error {
  DimensionMismatch(std::string module_name, std::string op, std::string detail)
      : Error(std::move(module_name), std::move(op), "dimension mismatch: " + std::move(detail)) {}
};

struct NonFiniteInput : Error {
  NonFiniteInput(std::string module_name, std::string op)
      : Error(std::move(module_name), std::move(op), "non-finite value in input") {}
};

struct EmptyInput : Error {
  EmptyInput(std::string module_name, std::string op, std::string detail)
      : Error(std::move(module_name), std::move(op), "empty input: " + std::move(detail)) {}
};

struct RankDeficient : Error {
  RankDeficient(std::string op, std::vector<std::string> columns)
      : Error("solvers", std::move(op),
              "rank-deficient design; dependent columns: " + join(columns)),
        dependent_columns(std::move(columns)) {}
  std::vector<std::string> dependent_columns;

private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    return s.empty() ? "(unnamed)" : s;
  }
};

struct NonConvergence : Error {
  NonConvergence(std::string module_name, std::string op, std::string detail)
      : Error(std::move(module_name), std::move(op), "no convergence: " + std::move(detail)) {}
};

struct InsufficientPrePeriod : Error {
  InsufficientPrePeriod(std::string module_name, std::string op, std::string detail)
      : Error(std::move(module_name), std::move(op),
              "insufficient pre-period: " + std::move(detail)) {}
};

struct InsufficientVariation : Error {
  InsufficientVariation(std::string module_name, std::string op, std::string detail)
      : Error(std::move(module_name), std::move(op),
              "insufficient variation: " + std::move(detail)) {}
};

struct MissingDonorSeries : Error {
  MissingDonorSeries(std::string op, const std::string& unit)
      : Error("scm", std::move(op), "donor series missing for '" + unit + "'") {}
};

struct SeriesTooShort : Error {
  SeriesTooShort(std::string module_name, std::string op, std::string detail)
      : Error(std::move(module_name), std::move(op), "series too short: " + std::move(detail)) {}
};

struct LagUnavailable : Error {
  explicit LagUnavailable(std::string detail)
      : Error("did", "fit_dynamic_did", "lag unavailable: " + std::move(detail)) {}
};

struct FactorRangeInvalid : Error {
  explicit FactorRangeInvalid(std::string detail)
      : Error("advanced", "fit_gsynth", "invalid factor range: " + std::move(detail)) {}
};

struct ZeroVariance : Error {
  ZeroVariance(std::string module_name, std::string op, const std::string& what_had_it)
      : Error(std::move(module_name), std::move(op), "zero variance in " + what_had_it) {}
};

struct InsufficientOverlap : Error {
  InsufficientOverlap(std::string op, std::string detail)
      : Error("report", std::move(op), "insufficient overlap: " + std::move(detail)) {}
};

struct ConfigError : Error {
  explicit ConfigError(std::string detail)
      : Error("cli", "load_config", std::move(detail)) {}
};

} // namespace panelcf
