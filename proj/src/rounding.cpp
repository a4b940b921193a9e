#include "homogamy/rounding.hpp"

#include <cmath>
#include <vector>

namespace homogamy {

namespace {

constexpr double kSnap = 1e-9;

double snap(double v) {
  const double r = std::nearbyint(v);
  return std::abs(v - r) <= kSnap * std::max(1.0, std::abs(v)) ? r : v;
}

long long integral_sum(double s, const char* what, Eigen::Index idx) {
  const double r = std::nearbyint(s);
  if (std::abs(s - r) > kSnap * std::max(1.0, std::abs(s))) {
    throw InfeasibleBlockTotals(std::string(what) + " " + std::to_string(idx) + " sums to " + std::to_string(s) +
                                ", which is not an integer");
  }
  return static_cast<long long>(r);
}

struct Search {
  struct Cell {
    Eigen::Index row;
    Eigen::Index col;
    double frac;
  };
  std::vector<Cell> cells;
  std::vector<long long> row_need;
  std::vector<long long> col_need;
  std::vector<long long> row_left;  // undecided fractional cells per row
  std::vector<long long> col_left;
  std::vector<char> pick;
  std::vector<char> best_pick;
  double best_score = -1.0;
  bool found = false;

  void run(std::size_t k, double score) {
    if (k == cells.size()) {
      for (long long v : row_need)
        if (v != 0) return;
      for (long long v : col_need)
        if (v != 0) return;
      if (!found || score > best_score + kSnap) {
        found = true;
        best_score = score;
        best_pick = pick;
      }
      return;
    }
    const Cell& c = cells[k];
    auto& rn = row_need[static_cast<std::size_t>(c.row)];
    auto& cn = col_need[static_cast<std::size_t>(c.col)];
    auto& rl = row_left[static_cast<std::size_t>(c.row)];
    auto& cl = col_left[static_cast<std::size_t>(c.col)];
    --rl;
    --cl;
    if (rn > 0 && cn > 0 && rn - 1 <= rl && cn - 1 <= cl) {
      --rn;
      --cn;
      pick[k] = 1;
      run(k + 1, score + c.frac);
      ++rn;
      ++cn;
    }
    if (rn <= rl && cn <= cl) {
      pick[k] = 0;
      run(k + 1, score);
    }
    ++rl;
    ++cl;
  }
};

}  // namespace

Matrix round_preserving_margins(const Matrix& x) {
  Matrix base(x.rows(), x.cols());
  Search s;
  s.row_need.assign(static_cast<std::size_t>(x.rows()), 0);
  s.col_need.assign(static_cast<std::size_t>(x.cols()), 0);
  s.row_left.assign(static_cast<std::size_t>(x.rows()), 0);
  s.col_left.assign(static_cast<std::size_t>(x.cols()), 0);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double v = snap(x(r, c));
      base(r, c) = std::floor(v);
      const double frac = v - base(r, c);
      if (frac > 0.0) {
        s.cells.push_back({r, c, frac});
        ++s.row_left[static_cast<std::size_t>(r)];
        ++s.col_left[static_cast<std::size_t>(c)];
      }
    }
  }
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    s.row_need[static_cast<std::size_t>(r)] =
        integral_sum(x.row(r).sum(), "row", r) - static_cast<long long>(base.row(r).sum());
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    s.col_need[static_cast<std::size_t>(c)] =
        integral_sum(x.col(c).sum(), "column", c) - static_cast<long long>(base.col(c).sum());

  s.pick.assign(s.cells.size(), 0);
  s.run(0, 0.0);
  if (!s.found) throw InfeasibleBlockTotals("no integer rounding preserves the block margins");
  for (std::size_t k = 0; k < s.cells.size(); ++k)
    if (s.best_pick[k]) base(s.cells[k].row, s.cells[k].col) += 1.0;
  return base;
}

}  // namespace homogamy
