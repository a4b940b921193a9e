#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "homogamy/gnm.hpp"

namespace homogamy::detail {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
/// Objective values (in couples) closer than this count as ties.
inline constexpr double kTieTolerance = 1e-9;

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b);
std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b);

/// Integer race-by-education availability read off the availability table.
struct Availability {
  std::array<std::vector<std::int64_t>, 2> male;    // [race][edu]
  std::array<std::vector<std::int64_t>, 2> female;  // [race][edu]
};
Availability availability_counts(const GnmProblem& p);

/// Rounded step-one table for a single order; throws NoFeasiblePoint when
/// the unrounded table has a cell below -epsilon (unless negatives are kept).
Matrix rounded_step1(const GnmProblem& p, SortOrder order);

/// One block of a two-step counterfactual: an NM kernel plus the weight each
/// block cell carries in the objective numerator.
class BlockEngine {
 public:
  BlockEngine(const ContingencyTable& source, Matrix weights, double epsilon, bool keep_negative, std::string name);

  std::size_t rows() const { return kernel_.rows(); }
  std::size_t cols() const { return kernel_.cols(); }
  /// Objective numerator is the same for every allocation with given block totals.
  bool uniform_weights() const { return uniform_; }

  struct Scratch {
    std::vector<double> male;
    std::vector<double> female;
    std::vector<double> corner;
    std::vector<double> cells;
  };
  Scratch make_scratch() const;

  /// Weighted sum of the block cells, or NaN when a cell is below -epsilon
  /// (never NaN when negatives are kept). Targets are read from the scratch
  /// male/female vectors.
  double value(Scratch& s) const;
  /// Block cells (row-major) in s.cells. Throws DegenerateSourceCut.
  void cells(Scratch& s) const;

 private:
  NmKernel kernel_;
  Matrix weights_;
  double epsilon_;
  bool keep_negative_;
  bool uniform_;
  std::string name_;
};

Matrix race_block_weights(const GnmProblem& p, std::size_t husband_race, std::size_t wife_race);
Matrix edu_block_weights(const GnmProblem& p, std::size_t male_edu, std::size_t female_edu);
ContingencyTable race_slice(const ContingencyTable& t, const RaceEduLayout& layout, std::size_t k, std::size_t l);

struct SearchResult {
  double best_max = -std::numeric_limits<double>::infinity();
  double best_min = std::numeric_limits<double>::infinity();
  AllocationPoint argmax;
  AllocationPoint argmin;
  std::uint64_t n_feasible = 0;
};

SearchResult search_race_first(const GnmProblem& p, const RaceFirstLattice& lattice);
SearchResult search_edu_first(const GnmProblem& p, const EduFirstLattice& lattice);

}  // namespace homogamy::detail
