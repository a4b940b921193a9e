#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "homogamy/tables.hpp"

namespace homogamy {

enum class CutFlag { Ok, NegativeAssortativity, DegenerateDenominator };

std::string_view to_string(CutFlag flag);

/// A table collapsed to two categories per axis: low (L) and high (H).
struct TwoByTwo {
  double ll = 0.0;
  double lh = 0.0;
  double hl = 0.0;
  double hh = 0.0;

  double high_row() const { return hl + hh; }
  double high_col() const { return lh + hh; }
  double total() const { return ll + lh + hl + hh; }
  /// Expected H,H count under random matching.
  double q() const { return high_row() * high_col() / total(); }
  /// Largest integer not exceeding q().
  double q_floor() const;
};

/// Floor of high_row * high_col / total.
///
/// Integral inputs are floored with exact integer arithmetic. Otherwise a
/// quotient within 1e-9 (relative) of an integer snaps to that integer, so
/// tables reconstructed in floating point floor the same way as the integral
/// tables they came from.
double random_matching_floor(double high_row, double high_col, double total);

/// True when min(N_H., N_.H) coincides with Q- (within the snapping tolerance).
bool is_degenerate_cut(double high_row, double high_col, double total);

/// Collapse rows 1..i vs i+1..n and columns 1..j vs j+1..m (1-based cuts).
TwoByTwo cut_aggregate(const ContingencyTable& t, std::size_t i, std::size_t j);

struct LiuLuValue {
  double value = 0.0;
  CutFlag flag = CutFlag::Ok;
};

/// (N_HH - Q-) / (min(N_H., N_.H) - Q-). Negative sorting is flagged, not
/// rejected. Throws DegenerateDenominator (reported at cut (i,j)) when the
/// denominator vanishes, ZeroTotal when the table is empty.
LiuLuValue ll_simple(const TwoByTwo& z, std::size_t i = 1, std::size_t j = 1);

/// Matrix of per-cut Liu-Lu values; entry (i,j) uses the 1-based cut (i,j).
struct LiuLuMatrix {
  Matrix values;  ///< (n-1) x (m-1); NaN where the cut is degenerate
  std::vector<CutFlag> flags;  ///< row-major, same shape as values

  std::size_t cut_rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cut_cols() const { return static_cast<std::size_t>(values.cols()); }
  double at(std::size_t i, std::size_t j) const { return values(i - 1, j - 1); }
  CutFlag flag(std::size_t i, std::size_t j) const { return flags[(i - 1) * cut_cols() + (j - 1)]; }
  bool any_degenerate() const;
};

LiuLuMatrix ll_generalized(const ContingencyTable& t);

}  // namespace homogamy
