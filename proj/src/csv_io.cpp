#include "homogamy/csv_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

namespace homogamy {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

// Splits one CSV line; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError("unterminated quote", line_no, out.size() + 1);
  out.push_back(trim(cur));
  return out;
}

struct Line {
  std::size_t number;
  std::vector<std::string> fields;
};

std::vector<Line> read_lines(std::istream& in) {
  std::vector<Line> lines;
  std::string raw;
  std::size_t no = 0;
  while (std::getline(in, raw)) {
    ++no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (trim(raw).empty() || trim(raw)[0] == '#') continue;
    lines.push_back({no, split_line(raw, no)});
  }
  return lines;
}

double parse_number(const std::string& s, std::size_t line, std::size_t col) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last) throw ParseError("expected a number, got '" + s + "'", line, col);
  if (!std::isfinite(v)) throw ParseError("non-finite number '" + s + "'", line, col);
  return v;
}

std::string join_levels(const std::vector<std::vector<std::string>>& levels, std::size_t i) {
  std::string out;
  for (std::size_t d = 0; d < levels.size(); ++d) {
    if (d) out += ':';
    out += levels[d][i];
  }
  return out;
}

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

LabeledTable read_table_csv(std::istream& in) {
  const std::vector<Line> lines = read_lines(in);
  if (lines.empty()) throw ParseError("empty table file", 1, 1);
  std::size_t header_rows = 0;
  while (header_rows < lines.size() && lines[header_rows].fields[0].empty()) ++header_rows;
  const std::size_t label_cols = header_rows;
  if (header_rows == lines.size()) throw ParseError("table has header rows but no data rows", lines.back().number, 1);

  const std::size_t width = lines[0].fields.size();
  for (const Line& l : lines) {
    if (l.fields.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " fields, found " + std::to_string(l.fields.size()),
                       l.number, std::min(l.fields.size(), width) + 1);
    }
  }
  if (width <= label_cols) throw ParseError("table has no numeric columns", lines[0].number, 1);
  const std::size_t n = lines.size() - header_rows;
  const std::size_t m = width - label_cols;

  LabeledTable out;
  out.col_levels.assign(header_rows, std::vector<std::string>(m));
  for (std::size_t d = 0; d < header_rows; ++d) {
    const Line& l = lines[d];
    for (std::size_t c = 0; c < label_cols; ++c) {
      if (!l.fields[c].empty()) throw ParseError("header rows must leave the label columns empty", l.number, c + 1);
    }
    for (std::size_t c = 0; c < m; ++c) {
      if (l.fields[label_cols + c].empty()) throw ParseError("missing column label", l.number, label_cols + c + 1);
      out.col_levels[d][c] = l.fields[label_cols + c];
    }
  }
  out.row_levels.assign(label_cols, std::vector<std::string>(n));
  Matrix counts(n, m);
  for (std::size_t r = 0; r < n; ++r) {
    const Line& l = lines[header_rows + r];
    for (std::size_t d = 0; d < label_cols; ++d) {
      if (l.fields[d].empty()) throw ParseError("missing row label", l.number, d + 1);
      out.row_levels[d][r] = l.fields[d];
    }
    for (std::size_t c = 0; c < m; ++c)
      counts(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_number(l.fields[label_cols + c], l.number, label_cols + c + 1);
  }
  if (n < 2 || m < 2) throw ParseError("a table needs at least two rows and two columns", lines[0].number, 1);

  std::vector<std::string> rl(n);
  std::vector<std::string> cl(m);
  for (std::size_t r = 0; r < n; ++r) rl[r] = label_cols ? join_levels(out.row_levels, r) : std::to_string(r + 1);
  for (std::size_t c = 0; c < m; ++c) cl[c] = header_rows ? join_levels(out.col_levels, c) : std::to_string(c + 1);
  out.table = ContingencyTable(std::move(counts), std::move(rl), std::move(cl));
  return out;
}

LabeledTable read_table_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return read_table_csv(in);
}

RaceEduLayout infer_layout(const LabeledTable& t) {
  if (t.row_levels.size() != 2 || t.col_levels.size() != 2) {
    throw ValidationError("race-by-education tables need two header rows and two label columns");
  }
  auto axis = [](const std::vector<std::vector<std::string>>& levels, const char* what) {
    const auto& race = levels[0];
    const auto& edu = levels[1];
    if (race.size() % 2 != 0) throw ValidationError(std::string(what) + " axis must split evenly into two races");
    const std::size_t half = race.size() / 2;
    std::array<std::string, 2> races{race[0], race[half]};
    std::vector<std::string> edus(edu.begin(), edu.begin() + static_cast<std::ptrdiff_t>(half));
    for (std::size_t i = 0; i < race.size(); ++i) {
      if (race[i] != races[i / half] || edu[i] != edus[i % half]) {
        throw ValidationError(std::string(what) + " labels are not race-major with the same education levels per race");
      }
    }
    return std::pair{races, edus};
  };
  const auto [row_races, male_edu] = axis(t.row_levels, "row");
  const auto [col_races, female_edu] = axis(t.col_levels, "column");
  if (row_races != col_races) throw ValidationError("row and column race labels differ");
  RaceEduLayout layout;
  layout.races = row_races;
  layout.male_edu = male_edu;
  layout.female_edu = female_edu;
  layout.validate();
  return layout;
}

void write_table_csv(std::ostream& out, const ContingencyTable& t, const RaceEduLayout& layout) {
  layout.require_conforms(t);
  out << ",";
  for (std::size_t race = 0; race < 2; ++race)
    for (std::size_t l = 0; l < layout.n_female_edu(); ++l) out << "," << layout.races[race];
  out << "\n,";
  for (std::size_t race = 0; race < 2; ++race)
    for (const auto& e : layout.female_edu) out << "," << e;
  out << "\n";
  for (std::size_t race = 0; race < 2; ++race) {
    for (std::size_t k = 0; k < layout.n_male_edu(); ++k) {
      out << layout.races[race] << "," << layout.male_edu[k];
      for (std::size_t c = 0; c < t.cols(); ++c) out << "," << format_number(t(layout.row_index(race, k), c));
      out << "\n";
    }
  }
}

RowFilter RowFilter::parse(const std::string& expr) {
  static const std::pair<const char*, Op> ops[] = {{"!=", Op::Ne}, {">=", Op::Ge}, {"<=", Op::Le},
                                                    {"=", Op::Eq},  {">", Op::Gt},  {"<", Op::Lt}};
  for (const auto& [token, op] : ops) {
    const auto pos = expr.find(token);
    if (pos == std::string::npos || pos == 0) continue;
    RowFilter f;
    f.column = trim(expr.substr(0, pos));
    f.op = op;
    f.value = trim(expr.substr(pos + std::char_traits<char>::length(token)));
    if (f.column.find_first_of("!<>=") != std::string::npos) continue;
    return f;
  }
  throw ValidationError("cannot parse filter '" + expr + "' (expected column OP value, OP one of = != < <= > >=)");
}

bool RowFilter::matches(const std::string& field) const {
  if (op == Op::Eq) return field == value;
  if (op == Op::Ne) return field != value;
  double a = 0.0;
  double b = 0.0;
  const auto ra = std::from_chars(field.data(), field.data() + field.size(), a);
  const auto rb = std::from_chars(value.data(), value.data() + value.size(), b);
  if (ra.ec != std::errc() || rb.ec != std::errc()) return false;
  switch (op) {
    case Op::Lt: return a < b;
    case Op::Le: return a <= b;
    case Op::Gt: return a > b;
    case Op::Ge: return a >= b;
    default: return false;
  }
}

std::vector<CoupleRecord> read_microdata_csv(std::istream& in, const std::vector<RowFilter>& filters) {
  const std::vector<Line> lines = read_lines(in);
  if (lines.empty()) throw ParseError("microdata file has no header", 1, 1);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < lines[0].fields.size(); ++i) col[lines[0].fields[i]] = i;
  auto need = [&](const std::string& name) {
    const auto it = col.find(name);
    if (it == col.end()) throw ParseError("missing column '" + name + "'", lines[0].number, lines[0].fields.size() + 1);
    return it->second;
  };
  const std::size_t hr = need("husband_race");
  const std::size_t he = need("husband_edu");
  const std::size_t wr = need("wife_race");
  const std::size_t we = need("wife_edu");
  const auto weight_it = col.find("weight");
  std::vector<std::size_t> filter_cols;
  for (const RowFilter& f : filters) filter_cols.push_back(need(f.column));

  std::vector<CoupleRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const Line& l = lines[i];
    if (l.fields.size() != lines[0].fields.size()) {
      throw ParseError("expected " + std::to_string(lines[0].fields.size()) + " fields, found " +
                           std::to_string(l.fields.size()),
                       l.number, std::min(l.fields.size(), lines[0].fields.size()) + 1);
    }
    bool keep = true;
    for (std::size_t k = 0; k < filters.size() && keep; ++k) keep = filters[k].matches(l.fields[filter_cols[k]]);
    if (!keep) continue;
    CoupleRecord rec{l.fields[hr], l.fields[he], l.fields[wr], l.fields[we], 1.0};
    if (weight_it != col.end()) rec.weight = parse_number(l.fields[weight_it->second], l.number, weight_it->second + 1);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace homogamy
