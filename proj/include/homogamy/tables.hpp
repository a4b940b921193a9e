#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "homogamy/error.hpp"

namespace homogamy {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Couple counts by husband type (rows) and wife type (columns).
///
/// Cells are real-valued: observed tables hold nonnegative counts (possibly
/// weighted), counterfactual tables may be fractional or negative.
class ContingencyTable {
 public:
  ContingencyTable() = default;
  /// Labels default to "1", "2", ...
  explicit ContingencyTable(Matrix counts);
  ContingencyTable(Matrix counts, std::vector<std::string> row_labels,
                   std::vector<std::string> col_labels);

  static ContingencyTable from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return static_cast<std::size_t>(counts_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(counts_.cols()); }
  double operator()(std::size_t r, std::size_t c) const { return counts_(r, c); }
  const Matrix& counts() const { return counts_; }
  const std::vector<std::string>& row_labels() const { return row_labels_; }
  const std::vector<std::string>& col_labels() const { return col_labels_; }

  double total() const { return counts_.sum(); }
  bool is_nonnegative() const { return (counts_.array() >= 0.0).all(); }

  /// Same shape and cell values (labels ignored).
  bool same_counts(const ContingencyTable& other) const;

 private:
  Matrix counts_;
  std::vector<std::string> row_labels_;
  std::vector<std::string> col_labels_;
};

struct Marginals {
  Vector rows;
  Vector cols;
};

Marginals marginals(const ContingencyTable& t);

/// Race x education type layout. Rows are husband types, columns wife types,
/// both race-major with education ascending inside each race.
struct RaceEduLayout {
  std::array<std::string, 2> races{"B", "W"};
  std::vector<std::string> male_edu{"L", "M", "H"};
  std::vector<std::string> female_edu{"L", "M", "H"};

  std::size_t n_male_edu() const { return male_edu.size(); }
  std::size_t n_female_edu() const { return female_edu.size(); }
  std::size_t rows() const { return 2 * male_edu.size(); }
  std::size_t cols() const { return 2 * female_edu.size(); }

  std::size_t row_index(std::size_t race, std::size_t edu) const { return race * male_edu.size() + edu; }
  std::size_t col_index(std::size_t race, std::size_t edu) const { return race * female_edu.size() + edu; }

  std::size_t race_index(const std::string& label) const;
  std::size_t male_edu_index(const std::string& label) const;
  std::size_t female_edu_index(const std::string& label) const;

  std::vector<std::string> row_labels() const;
  std::vector<std::string> col_labels() const;

  /// Husband education k and wife education l count as homogamous when
  /// their labels match.
  bool homogamous(std::size_t male_edu_k, std::size_t female_edu_l) const {
    return male_edu[male_edu_k] == female_edu[female_edu_l];
  }

  /// Throws ValidationError unless races are distinct and each education
  /// list has at least two distinct levels.
  void validate() const;
  /// Throws DimensionMismatch when t does not have layout dimensions.
  void require_conforms(const ContingencyTable& t) const;
  ContingencyTable make_table(Matrix counts) const;

  bool operator==(const RaceEduLayout&) const = default;
};

/// Label of a type combining race and education, e.g. "B:L".
std::string type_label(const std::string& race, const std::string& edu);

struct CoupleRecord {
  std::string husband_race;
  std::string husband_edu;
  std::string wife_race;
  std::string wife_edu;
  double weight = 1.0;
};

/// Weighted cross-tabulation of couple records under layout.
ContingencyTable from_microdata(const std::vector<CoupleRecord>& records, const RaceEduLayout& layout);

/// Share of couples whose spouses have the same education level.
double sehc(const ContingencyTable& t, const RaceEduLayout& layout);
/// One minus the share of couples inside the two same-race blocks.
double sirm(const ContingencyTable& t, const RaceEduLayout& layout);

/// 2x2 table of couple counts by (husband race, wife race).
ContingencyTable race_aggregate(const ContingencyTable& t, const RaceEduLayout& layout);
/// n x m table by (husband education, wife education), summed over races.
ContingencyTable edu_aggregate(const ContingencyTable& t, const RaceEduLayout& layout);
/// Education sub-table of one racial block; races are layout indices (0 or 1).
ContingencyTable block_extract(const ContingencyTable& t, const RaceEduLayout& layout,
                               std::size_t husband_race, std::size_t wife_race);
ContingencyTable block_extract(const ContingencyTable& t, const RaceEduLayout& layout,
                               const std::string& husband_race, const std::string& wife_race);

/// Ordered contiguous grouping of categories; each group lists 0-based indices.
using Partition = std::vector<std::vector<std::size_t>>;

/// Partition from consecutive group sizes, e.g. {1, 2} -> {{0}, {1, 2}}.
Partition partition_from_sizes(const std::vector<std::size_t>& sizes);
/// Groups of a partition applied after another: outer groups index inner groups.
Partition compose_partitions(const Partition& inner, const Partition& outer);

ContingencyTable merge_categories(const ContingencyTable& t, const Partition& row_groups,
                                  const Partition& col_groups);
/// Sums of v within each group.
Vector merge_vector(const Vector& v, const Partition& groups);

}  // namespace homogamy
