#include "homogamy/tables.hpp"

#include <algorithm>
#include <set>

namespace homogamy {

namespace {

std::vector<std::string> numbered_labels(std::size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::to_string(i + 1));
  return out;
}

void validate_partition(const Partition& groups, std::size_t n, const char* axis) {
  std::size_t next = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw NonContiguousGroup(std::string("empty ") + axis + " group");
    for (std::size_t idx : g) {
      if (idx != next) {
        throw NonContiguousGroup(std::string(axis) + " groups must be contiguous, ordered and exhaustive; expected index " +
                                 std::to_string(next) + ", got " + std::to_string(idx));
      }
      ++next;
    }
  }
  if (next != n) {
    throw NonContiguousGroup(std::string(axis) + " groups cover " + std::to_string(next) + " of " +
                             std::to_string(n) + " categories");
  }
}

std::string join_labels(const std::vector<std::string>& labels, const std::vector<std::size_t>& group) {
  std::string out;
  for (std::size_t k = 0; k < group.size(); ++k) {
    if (k) out += "+";
    out += labels[group[k]];
  }
  return out;
}

void require_positive_total(double total) {
  if (!(total > 0.0)) throw ZeroTotal("table grand total must be positive, got " + std::to_string(total));
}

}  // namespace

ContingencyTable::ContingencyTable(Matrix counts)
    : counts_(std::move(counts)),
      row_labels_(numbered_labels(static_cast<std::size_t>(counts_.rows()))),
      col_labels_(numbered_labels(static_cast<std::size_t>(counts_.cols()))) {}

ContingencyTable::ContingencyTable(Matrix counts, std::vector<std::string> row_labels,
                                   std::vector<std::string> col_labels)
    : counts_(std::move(counts)), row_labels_(std::move(row_labels)), col_labels_(std::move(col_labels)) {
  if (row_labels_.size() != rows() || col_labels_.size() != cols()) {
    throw DimensionMismatch("label count does not match table dimensions");
  }
}

ContingencyTable ContingencyTable::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n ? rows.begin()->size() : 0;
  Matrix counts(n, m);
  std::size_t r = 0;
  for (const auto& row : rows) {
    if (row.size() != m) throw DimensionMismatch("ragged table literal");
    std::size_t c = 0;
    for (double v : row) counts(r, c++) = v;
    ++r;
  }
  return ContingencyTable(std::move(counts));
}

bool ContingencyTable::same_counts(const ContingencyTable& other) const {
  return rows() == other.rows() && cols() == other.cols() && counts_ == other.counts_;
}

Marginals marginals(const ContingencyTable& t) {
  return {t.counts().rowwise().sum(), t.counts().colwise().sum().transpose()};
}

std::string type_label(const std::string& race, const std::string& edu) {
  return race.empty() ? edu : race + ":" + edu;
}

std::size_t RaceEduLayout::race_index(const std::string& label) const {
  for (std::size_t i = 0; i < 2; ++i)
    if (races[i] == label) return i;
  throw UnknownLabel("unknown race label '" + label + "'");
}

std::size_t RaceEduLayout::male_edu_index(const std::string& label) const {
  auto it = std::find(male_edu.begin(), male_edu.end(), label);
  if (it == male_edu.end()) throw UnknownLabel("unknown husband education label '" + label + "'");
  return static_cast<std::size_t>(it - male_edu.begin());
}

std::size_t RaceEduLayout::female_edu_index(const std::string& label) const {
  auto it = std::find(female_edu.begin(), female_edu.end(), label);
  if (it == female_edu.end()) throw UnknownLabel("unknown wife education label '" + label + "'");
  return static_cast<std::size_t>(it - female_edu.begin());
}

std::vector<std::string> RaceEduLayout::row_labels() const {
  std::vector<std::string> out;
  for (const auto& r : races)
    for (const auto& e : male_edu) out.push_back(type_label(r, e));
  return out;
}

std::vector<std::string> RaceEduLayout::col_labels() const {
  std::vector<std::string> out;
  for (const auto& r : races)
    for (const auto& e : female_edu) out.push_back(type_label(r, e));
  return out;
}

void RaceEduLayout::validate() const {
  if (races[0] == races[1]) throw ValidationError("race labels must be distinct");
  auto check = [](const std::vector<std::string>& v, const char* who) {
    if (v.size() < 2) throw ValidationError(std::string(who) + " education needs at least two levels");
    std::set<std::string> seen(v.begin(), v.end());
    if (seen.size() != v.size()) throw ValidationError(std::string(who) + " education labels must be distinct");
  };
  check(male_edu, "husband");
  check(female_edu, "wife");
}

void RaceEduLayout::require_conforms(const ContingencyTable& t) const {
  if (t.rows() != rows() || t.cols() != cols()) {
    throw DimensionMismatch("table is " + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) +
                            " but the layout expects " + std::to_string(rows()) + "x" + std::to_string(cols()));
  }
}

ContingencyTable RaceEduLayout::make_table(Matrix counts) const {
  return ContingencyTable(std::move(counts), row_labels(), col_labels());
}

ContingencyTable from_microdata(const std::vector<CoupleRecord>& records, const RaceEduLayout& layout) {
  layout.validate();
  Matrix counts = Matrix::Zero(layout.rows(), layout.cols());
  for (const auto& rec : records) {
    if (!(rec.weight >= 0.0)) throw NegativeWeight("record weight must be nonnegative, got " + std::to_string(rec.weight));
    const std::size_t r = layout.row_index(layout.race_index(rec.husband_race), layout.male_edu_index(rec.husband_edu));
    const std::size_t c = layout.col_index(layout.race_index(rec.wife_race), layout.female_edu_index(rec.wife_edu));
    counts(r, c) += rec.weight;
  }
  return layout.make_table(std::move(counts));
}

double sehc(const ContingencyTable& t, const RaceEduLayout& layout) {
  layout.require_conforms(t);
  const double total = t.total();
  require_positive_total(total);
  double homogamous = 0.0;
  for (std::size_t hr = 0; hr < 2; ++hr)
    for (std::size_t k = 0; k < layout.n_male_edu(); ++k)
      for (std::size_t wr = 0; wr < 2; ++wr)
        for (std::size_t l = 0; l < layout.n_female_edu(); ++l)
          if (layout.homogamous(k, l)) homogamous += t(layout.row_index(hr, k), layout.col_index(wr, l));
  return homogamous / total;
}

double sirm(const ContingencyTable& t, const RaceEduLayout& layout) {
  layout.require_conforms(t);
  const double total = t.total();
  require_positive_total(total);
  const Matrix racial = race_aggregate(t, layout).counts();
  return 1.0 - (racial(0, 0) + racial(1, 1)) / total;
}

ContingencyTable race_aggregate(const ContingencyTable& t, const RaceEduLayout& layout) {
  layout.require_conforms(t);
  const auto n = static_cast<Eigen::Index>(layout.n_male_edu());
  const auto m = static_cast<Eigen::Index>(layout.n_female_edu());
  Matrix out(2, 2);
  for (Eigen::Index hr = 0; hr < 2; ++hr)
    for (Eigen::Index wr = 0; wr < 2; ++wr) out(hr, wr) = t.counts().block(hr * n, wr * m, n, m).sum();
  return ContingencyTable(std::move(out), {layout.races[0], layout.races[1]}, {layout.races[0], layout.races[1]});
}

ContingencyTable edu_aggregate(const ContingencyTable& t, const RaceEduLayout& layout) {
  layout.require_conforms(t);
  const auto n = static_cast<Eigen::Index>(layout.n_male_edu());
  const auto m = static_cast<Eigen::Index>(layout.n_female_edu());
  Matrix out = Matrix::Zero(n, m);
  for (Eigen::Index hr = 0; hr < 2; ++hr)
    for (Eigen::Index wr = 0; wr < 2; ++wr) out += t.counts().block(hr * n, wr * m, n, m);
  return ContingencyTable(std::move(out), layout.male_edu, layout.female_edu);
}

ContingencyTable block_extract(const ContingencyTable& t, const RaceEduLayout& layout, std::size_t husband_race,
                               std::size_t wife_race) {
  layout.require_conforms(t);
  if (husband_race > 1 || wife_race > 1) throw UnknownLabel("race index must be 0 or 1");
  const auto n = static_cast<Eigen::Index>(layout.n_male_edu());
  const auto m = static_cast<Eigen::Index>(layout.n_female_edu());
  Matrix out = t.counts().block(static_cast<Eigen::Index>(husband_race) * n,
                                static_cast<Eigen::Index>(wife_race) * m, n, m);
  return ContingencyTable(std::move(out), layout.male_edu, layout.female_edu);
}

ContingencyTable block_extract(const ContingencyTable& t, const RaceEduLayout& layout,
                               const std::string& husband_race, const std::string& wife_race) {
  return block_extract(t, layout, layout.race_index(husband_race), layout.race_index(wife_race));
}

Partition partition_from_sizes(const std::vector<std::size_t>& sizes) {
  Partition out;
  std::size_t next = 0;
  for (std::size_t s : sizes) {
    std::vector<std::size_t> g(s);
    for (auto& idx : g) idx = next++;
    out.push_back(std::move(g));
  }
  return out;
}

Partition compose_partitions(const Partition& inner, const Partition& outer) {
  Partition out;
  for (const auto& og : outer) {
    std::vector<std::size_t> merged;
    for (std::size_t gi : og) {
      if (gi >= inner.size()) throw NonContiguousGroup("outer partition refers to a missing group");
      merged.insert(merged.end(), inner[gi].begin(), inner[gi].end());
    }
    out.push_back(std::move(merged));
  }
  return out;
}

ContingencyTable merge_categories(const ContingencyTable& t, const Partition& row_groups,
                                  const Partition& col_groups) {
  validate_partition(row_groups, t.rows(), "row");
  validate_partition(col_groups, t.cols(), "column");
  Matrix out = Matrix::Zero(row_groups.size(), col_groups.size());
  std::vector<std::string> rl, cl;
  for (std::size_t g = 0; g < row_groups.size(); ++g) {
    rl.push_back(join_labels(t.row_labels(), row_groups[g]));
    for (std::size_t h = 0; h < col_groups.size(); ++h)
      for (std::size_t r : row_groups[g])
        for (std::size_t c : col_groups[h]) out(g, h) += t(r, c);
  }
  for (const auto& g : col_groups) cl.push_back(join_labels(t.col_labels(), g));
  return ContingencyTable(std::move(out), std::move(rl), std::move(cl));
}

Vector merge_vector(const Vector& v, const Partition& groups) {
  validate_partition(groups, static_cast<std::size_t>(v.size()), "vector");
  Vector out = Vector::Zero(static_cast<Eigen::Index>(groups.size()));
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (std::size_t idx : groups[g]) out(static_cast<Eigen::Index>(g)) += v(static_cast<Eigen::Index>(idx));
  return out;
}

}  // namespace homogamy
