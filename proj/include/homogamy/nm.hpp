#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "homogamy/liulu.hpp"
#include "homogamy/tables.hpp"

namespace homogamy {

/// Row and column totals the counterfactual table must reproduce.
struct TargetMarginals {
  Vector rows;
  Vector cols;

  static TargetMarginals of(const ContingencyTable& availability);
  double total() const { return rows.sum(); }
  /// Nonnegative entries and a common grand total (within 1e-9 relative).
  void validate() const;
};

struct NegativeCell {
  std::size_t row;
  std::size_t col;
  double value;
};

struct NmOptions {
  /// A target cut whose tail sums leave a single admissible count (an empty
  /// tail, or a tail holding the whole population) is normally an error. When
  /// allowed, the forced count is used and the cut is listed in forced_cuts.
  bool allow_forced_cuts = false;
  /// Cells below -negative_tolerance are reported as negative.
  double negative_tolerance = 1e-9;
};

struct NmResult {
  ContingencyTable table;
  std::vector<NegativeCell> negative_cells;
  /// Per-cut flags of the preference source (row-major over cuts).
  std::vector<CutFlag> cut_flags;
  /// 1-based target cuts fixed by the marginals alone.
  std::vector<std::pair<std::size_t, std::size_t>> forced_cuts;

  bool has_negative() const { return !negative_cells.empty(); }
  bool any_negative_assortativity() const;
};

/// Closed-form counterfactual engine for one preference source.
///
/// For every interior cut (i,j) the source's Liu-Lu value theta fixes the
/// counterfactual count of couples with husband type > i and wife type > j:
///
///   S*(i+1, j+1) = Q*- + theta * (min(R*_{>i}, C*_{>j}) - Q*-),
///
/// with R*, C* the target tail sums and Q*- the floored random-matching count
/// for those tails. Boundary corner sums are the target tails themselves and
/// cells follow by double differencing, so marginals are reproduced exactly
/// and every cut keeps the source's theta. A source with zero total is
/// accepted; all its cuts are degenerate, so only all-forced targets succeed.
class NmKernel {
 public:
  explicit NmKernel(const ContingencyTable& source);

  enum class Status { Ok, DegenerateTarget, DegenerateSource };
  struct Outcome {
    Status status = Status::Ok;
    std::size_t cut_row = 0;  ///< 1-based cut when status != Ok
    std::size_t cut_col = 0;
    std::size_t n_forced = 0;
  };

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return m_; }
  const LiuLuMatrix& measure() const { return measure_; }

  /// corner receives (n+1) x (m+1) survival sums, row-major; cells receives
  /// n x m counts, row-major.
  Outcome corner_sums(std::span<const double> row_targets, std::span<const double> col_targets,
                      std::span<double> corner, bool allow_forced,
                      std::vector<std::pair<std::size_t, std::size_t>>* forced = nullptr) const;
  Outcome apply(std::span<const double> row_targets, std::span<const double> col_targets,
                std::span<double> corner, std::span<double> cells, bool allow_forced) const;

  /// Survival sum at interior cut (i, j), 1-based, from its row and column
  /// tails and a positive total. DegenerateTarget marks a forced cut, with
  /// s set to the random-matching floor; s is untouched on DegenerateSource.
  Status cut_sum(std::size_t i, std::size_t j, double row_tail, double col_tail, double total, double& s) const;

 private:
  std::size_t n_;
  std::size_t m_;
  LiuLuMatrix measure_;
  std::vector<double> num_;  // per cut: N_HH - Q-
  std::vector<double> den_;  // per cut: min(N_H., N_.H) - Q-
};

/// (n+1) x (m+1) matrix S with S(r,c) = counterfactual count of couples with
/// husband category >= r+1 and wife category >= c+1 (0-based storage of the
/// 1-based survival sums; last row and column are zero).
Matrix nm_corner_sums(const ContingencyTable& source, const TargetMarginals& targets,
                      const NmOptions& options = {});

NmResult nm_transform(const ContingencyTable& source, const TargetMarginals& targets,
                      const NmOptions& options = {});

/// Targets read off the marginals of another observed table.
NmResult nm_transform(const ContingencyTable& source, const ContingencyTable& availability,
                      const NmOptions& options = {});

}  // namespace homogamy
