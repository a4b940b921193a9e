#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace homogamy {

/// Broad failure category. The CLI maps each one to an exit code.
enum class ErrorCategory { Validation, Parse, DegenerateCut, NoFeasiblePoint };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorCategory::Validation, what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(ErrorCategory::Parse, what + " (line " + std::to_string(line) + ", column " +
                                        std::to_string(column) + ")"),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class UnknownLabel : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NegativeWeight : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NonContiguousGroup : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class CutOutOfRange : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ZeroTotal : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DimensionMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InvalidTargets : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InfeasibleBlockTotals : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class LatticeTooLarge : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateCutError : public Error {
 public:
  DegenerateCutError(const std::string& what, std::size_t cut_row, std::size_t cut_col)
      : Error(ErrorCategory::DegenerateCut, what), cut_row_(cut_row), cut_col_(cut_col) {}
  /// 1-based cut indices (rows 1..i vs i+1..n).
  std::size_t cut_row() const noexcept { return cut_row_; }
  std::size_t cut_col() const noexcept { return cut_col_; }

 private:
  std::size_t cut_row_;
  std::size_t cut_col_;
};

/// min(N_H., N_.H) equals the floored random-matching count, so the
/// Liu-Lu ratio has a zero denominator.
class DegenerateDenominator : public DegenerateCutError {
 public:
  DegenerateDenominator(std::size_t i, std::size_t j, double high_row, double high_col, double q_floor)
      : DegenerateCutError("degenerate Liu-Lu denominator at cut (" + std::to_string(i) + "," +
                               std::to_string(j) + "): N_H.=" + std::to_string(high_row) +
                               " N_.H=" + std::to_string(high_col) + " Q-=" + std::to_string(q_floor),
                           i, j),
        high_row_(high_row),
        high_col_(high_col),
        q_floor_(q_floor) {}
  double high_row() const noexcept { return high_row_; }
  double high_col() const noexcept { return high_col_; }
  double q_floor() const noexcept { return q_floor_; }

 private:
  double high_row_;
  double high_col_;
  double q_floor_;
};

class DegenerateTargetCut : public DegenerateCutError {
 public:
  using DegenerateCutError::DegenerateCutError;
};

class DegenerateSourceCut : public DegenerateCutError {
 public:
  using DegenerateCutError::DegenerateCutError;
};

class NoFeasiblePoint : public Error {
 public:
  explicit NoFeasiblePoint(const std::string& what) : Error(ErrorCategory::NoFeasiblePoint, what) {}
};

}  // namespace homogamy
