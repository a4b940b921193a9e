#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "homogamy/tables.hpp"

namespace homogamy {

/// A table read from CSV together with its (one- or two-level) axis labels.
struct LabeledTable {
  ContingencyTable table;
  /// levels[d][i]: label of category i at header level d.
  std::vector<std::vector<std::string>> row_levels;
  std::vector<std::vector<std::string>> col_levels;
};

/// Reads a table. Leading lines whose first field is empty are column header
/// rows; the same number of leading fields on every data line are row
/// labels. The race-by-education format uses two of each (race, then
/// education). Without header rows the file is a bare numeric matrix.
/// Throws ParseError with 1-based line and column.
LabeledTable read_table_csv(std::istream& in);
LabeledTable read_table_csv_file(const std::string& path);

/// Layout described by two-level labels, race-major with education nested.
/// Throws ValidationError when the labels do not have that structure.
RaceEduLayout infer_layout(const LabeledTable& t);

/// Writes a race-by-education table in the two-header format.
void write_table_csv(std::ostream& out, const ContingencyTable& t, const RaceEduLayout& layout);

/// Row predicate on a named microdata column, e.g. "age>=30" or "year=1980".
struct RowFilter {
  enum class Op { Eq, Ne, Lt, Le, Gt, Ge };
  std::string column;
  Op op = Op::Eq;
  std::string value;

  static RowFilter parse(const std::string& expr);
  bool matches(const std::string& field) const;
};

/// Reads couple records from a headed CSV with columns husband_race,
/// husband_edu, wife_race, wife_edu and optionally weight (default 1);
/// other columns are available to filters. Throws ParseError.
std::vector<CoupleRecord> read_microdata_csv(std::istream& in, const std::vector<RowFilter>& filters = {});

}  // namespace homogamy
