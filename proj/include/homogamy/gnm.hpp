#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "homogamy/nm.hpp"
#include "homogamy/tables.hpp"

namespace homogamy {

enum class SortOrder { RaceFirst, EducationFirst, BothOrders };
enum class Objective { Sehc, Sirm };
/// FullLattice searches every feasible allocation; ObservedPoint evaluates
/// only the allocation actually observed in the availability table.
enum class SearchMode { FullLattice, ObservedPoint };
/// Which observation supplies the education preferences inside racial
/// blocks when race is sorted first: the education-preference time (default)
/// or, as the block formulas are literally indexed, the race-preference time.
enum class EducationSource { EducationTime, RaceTime };

std::string_view to_string(SortOrder order);
std::string_view to_string(Objective objective);
std::string_view to_string(SearchMode mode);
std::string_view to_string(EducationSource source);

double evaluate_objective(Objective objective, const ContingencyTable& t, const RaceEduLayout& layout);

struct GnmProblem {
  ContingencyTable race_pref;     ///< observation supplying preferences over race
  ContingencyTable availability;  ///< observation supplying the trait distributions
  ContingencyTable edu_pref;      ///< observation supplying preferences over education
  RaceEduLayout layout;
  SortOrder order = SortOrder::RaceFirst;
  Objective objective = Objective::Sehc;
  /// Allocations whose counterfactual has a cell below -epsilon are excluded.
  double epsilon = 1e-9;
  /// Diagnostic mode: keep allocations with negative cells in the search.
  bool keep_negative = false;
  SearchMode mode = SearchMode::FullLattice;
  EducationSource edu_source = EducationSource::EducationTime;
  unsigned jobs = 1;

  /// Throws ValidationError (or a subclass) on nonconforming tables, negative
  /// observed counts, or non-integral race-by-education availability.
  void validate() const;
};

/// Integer point of the under-determined second step.
///
/// RaceFirst coordinates, concatenated in this order:
///   male_B[k]   race-0 husbands of education k married to race-1 wives
///   male_W[k]   race-1 husbands of education k married to race-0 wives
///   female_B[l] race-0 wives of education l married to race-1 husbands
///   female_W[l] race-1 wives of education l married to race-0 husbands
/// (race 0 / race 1 are the layout's first and second race labels).
///
/// EducationFirst coordinates, for each wife education l in turn:
///   x[0..n-1][l] race-0 husbands of education k in education block (k,l)
///   y[0..n-1][l] race-0 wives in education block (k,l)
///
/// Points compare lexicographically by coordinates.
struct AllocationPoint {
  SortOrder order = SortOrder::RaceFirst;
  std::vector<std::int64_t> coords;

  auto operator<=>(const AllocationPoint&) const = default;
};

/// Integer vectors with a fixed sum and per-coordinate caps, stored in
/// lexicographic order. Coordinate ranges are tightened before enumeration
/// so no partial vector is a dead end.
class CompositionSet {
 public:
  CompositionSet() = default;
  CompositionSet(std::int64_t total, std::vector<std::int64_t> caps);

  std::size_t size() const { return dim_ ? data_.size() / dim_ : 0; }
  std::size_t dim() const { return dim_; }
  std::int64_t total() const { return total_; }
  std::span<const std::int64_t> operator[](std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::optional<std::size_t> index_of(std::span<const std::int64_t> v) const;

  /// Number of vectors without materializing them.
  static std::uint64_t count(std::int64_t total, std::span<const std::int64_t> caps);

 private:
  std::size_t dim_ = 0;
  std::int64_t total_ = 0;
  std::vector<std::int64_t> caps_;
  std::vector<std::int64_t> data_;
};

/// Feasible allocations for race-first sorting given the rounded racial table.
struct RaceFirstLattice {
  Matrix racial;  ///< 2x2 integer block totals
  std::array<std::vector<std::int64_t>, 2> male_avail;    ///< per race, by education
  std::array<std::vector<std::int64_t>, 2> female_avail;  ///< per race, by education
  /// male_B, male_W, female_B, female_W
  std::array<CompositionSet, 4> parts;

  std::uint64_t size() const;  ///< saturates at UINT64_MAX
};

/// Feasible allocations for education-first sorting given the rounded
/// education table.
struct EduFirstLattice {
  Matrix edu;  ///< n x m integer block totals
  std::array<std::vector<std::int64_t>, 2> male_avail;
  std::array<std::vector<std::int64_t>, 2> female_avail;
  /// x[k][l] <= male_cap(k,l), y[k][l] <= female_cap(k,l)
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> male_cap;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> female_cap;

  std::uint64_t size() const;  ///< saturates at UINT64_MAX
};

/// Step one of race-first sorting: the unrounded counterfactual racial table.
ContingencyTable racial_step(const GnmProblem& p);
/// Step one of education-first sorting: the unrounded counterfactual
/// education table.
ContingencyTable education_step(const GnmProblem& p);

RaceFirstLattice race_first_lattice(const GnmProblem& p, const ContingencyTable& racial);
EduFirstLattice edu_first_lattice(const GnmProblem& p, const ContingencyTable& edu);

/// Calls fn for every lattice point in lexicographic order. The step-one
/// table is rounded internally. Throws InfeasibleBlockTotals when the
/// lattice is empty.
void for_each_allocation(const GnmProblem& p, const ContingencyTable& step1, SortOrder order,
                         const std::function<void(const AllocationPoint&)>& fn);
/// Materialized for_each_allocation; throws LatticeTooLarge above limit.
std::vector<AllocationPoint> enumerate_allocations(const GnmProblem& p, const ContingencyTable& racial,
                                                   std::uint64_t limit = 10'000'000);
/// Education-first step one and its allocation points.
std::pair<ContingencyTable, std::vector<AllocationPoint>> education_first_step(const GnmProblem& p,
                                                                               std::uint64_t limit = 10'000'000);

struct Assembly {
  ContingencyTable table;
  std::vector<NegativeCell> negative_cells;  ///< cells below -epsilon
};

/// Counterfactual table for one allocation: one NM transform per block
/// (racial blocks when race goes first, education blocks otherwise).
Assembly assemble_counterfactual(const GnmProblem& p, const ContingencyTable& step1, const AllocationPoint& a);

/// The allocation realized by the availability table itself.
AllocationPoint observed_allocation(const GnmProblem& p, SortOrder order);

struct MomentInterval {
  SortOrder order = SortOrder::RaceFirst;
  double min_value = 0.0;
  double max_value = 0.0;
  AllocationPoint argmin;
  AllocationPoint argmax;
  std::uint64_t n_lattice = 0;
  std::uint64_t n_feasible = 0;
  std::uint64_t n_excluded_negative = 0;
  /// Objective at the observed allocation when it lies in the lattice and
  /// passes the negative-cell rule.
  std::optional<double> observed_value;
  /// Rounded step-one table (2x2 racial or n x m education).
  Matrix step1;
  /// For BothOrders: race-first then education-first results.
  std::vector<MomentInterval> per_order;

  bool contains(const MomentInterval& other) const {
    return min_value <= other.min_value && other.max_value <= max_value;
  }
};

/// Min and max of the objective over every feasible allocation.
///
/// The search is exact. The objective separates over the coupled allocation
/// vectors; candidates are dropped only when a bound shows them worse than
/// the incumbent by more than the tie tolerance. Ties go to the
/// lexicographically smallest allocation, and reported values are recomputed
/// from the assembled table at argmin and argmax.
MomentInterval gnm_interval(const GnmProblem& p);

}  // namespace homogamy
