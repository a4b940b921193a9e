#include "homogamy/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace homogamy::report {

double fixed9(double v) {
  const double r = std::round(v * 1e9) / 1e9;
  return r == 0.0 ? 0.0 : r;  // drop the sign of -0
}

Json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return fixed9(v);
}

std::string fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64(ss.str());
}

Json matrix(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(number(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json table(const ContingencyTable& t) {
  Json j;
  j["row_labels"] = t.row_labels();
  j["col_labels"] = t.col_labels();
  j["cells"] = matrix(t.counts());
  j["total"] = number(t.total());
  return j;
}

Json liu_lu(const LiuLuMatrix& m) {
  Json flags = Json::array();
  for (std::size_t i = 0; i < m.cut_rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cut_cols(); ++j) row.push_back(std::string(to_string(m.flags[i * m.cut_cols() + j])));
    flags.push_back(std::move(row));
  }
  Json j;
  j["values"] = matrix(m.values);
  j["flags"] = std::move(flags);
  return j;
}

Json nm_result(const NmResult& r) {
  Json j;
  j["table"] = table(r.table);
  Json neg = Json::array();
  for (const NegativeCell& c : r.negative_cells) {
    neg.push_back(Json{{"row", r.table.row_labels()[c.row]}, {"col", r.table.col_labels()[c.col]}, {"value", number(c.value)}});
  }
  j["negative_cells"] = std::move(neg);
  Json forced = Json::array();
  for (const auto& [i, k] : r.forced_cuts) forced.push_back(Json::array({i, k}));
  j["forced_cuts"] = std::move(forced);
  return j;
}

Json allocation(const AllocationPoint& a, const RaceEduLayout& L) {
  Json j;
  j["order"] = std::string(to_string(a.order));
  j["coords"] = a.coords;
  const std::size_t n = L.n_male_edu();
  const std::size_t m = L.n_female_edu();
  if (a.order == SortOrder::RaceFirst && a.coords.size() == 2 * n + 2 * m) {
    // Counts of each race/sex married across the race line, by education.
    auto slice = [&](std::size_t from, std::size_t len) {
      return std::vector<std::int64_t>(a.coords.begin() + static_cast<std::ptrdiff_t>(from),
                                       a.coords.begin() + static_cast<std::ptrdiff_t>(from + len));
    };
    Json parts;
    parts["husbands_" + L.races[0]] = slice(0, n);
    parts["husbands_" + L.races[1]] = slice(n, n);
    parts["wives_" + L.races[0]] = slice(2 * n, m);
    parts["wives_" + L.races[1]] = slice(2 * n + m, m);
    j["intermarried"] = std::move(parts);
  } else if (a.order == SortOrder::EducationFirst && a.coords.size() == 2 * n * m) {
    Json x = Json::array();
    Json y = Json::array();
    for (std::size_t k = 0; k < n; ++k) {
      Json xr = Json::array();
      Json yr = Json::array();
      for (std::size_t l = 0; l < m; ++l) {
        xr.push_back(a.coords[l * 2 * n + k]);
        yr.push_back(a.coords[l * 2 * n + n + k]);
      }
      x.push_back(std::move(xr));
      y.push_back(std::move(yr));
    }
    j["husbands_" + L.races[0] + "_by_block"] = std::move(x);
    j["wives_" + L.races[0] + "_by_block"] = std::move(y);
  }
  return j;
}

Json moment_interval(const MomentInterval& mi, const RaceEduLayout& layout, Objective objective) {
  Json j;
  j["order"] = std::string(to_string(mi.order));
  j["objective"] = std::string(to_string(objective));
  j["min"] = number(mi.min_value);
  j["max"] = number(mi.max_value);
  j["observed_value"] = mi.observed_value ? number(*mi.observed_value) : Json(nullptr);
  j["argmin"] = allocation(mi.argmin, layout);
  j["argmax"] = allocation(mi.argmax, layout);
  j["n_lattice"] = mi.n_lattice;
  j["n_feasible"] = mi.n_feasible;
  j["n_excluded_negative"] = mi.n_excluded_negative;
  j["step1"] = matrix(mi.step1);
  if (!mi.per_order.empty()) {
    Json per = Json::array();
    for (const MomentInterval& o : mi.per_order) per.push_back(moment_interval(o, layout, objective));
    j["per_order"] = std::move(per);
  }
  return j;
}

Json interval(const Interval& i) { return Json{{"min", number(i.lo)}, {"max", number(i.hi)}}; }

Json decomposition(const DecompositionReport& r) {
  Json j;
  j["total_change"] = interval(r.total_change);
  Json comps = Json::array();
  for (const Component& c : r.components) {
    const char* kind = c.kind == Component::Kind::Main ? "main" : c.kind == Component::Kind::Interaction ? "interaction"
                                                                                                         : "residuum";
    comps.push_back(Json{{"name", c.name}, {"kind", kind}, {"min", number(c.value.lo)}, {"max", number(c.value.hi)}});
  }
  j["components"] = std::move(comps);
  j["exact_sum_check"] = number(r.exact_sum_check);
  j["intervals"] = r.conservative ? "conservative" : "exact";
  Json corners = Json::array();
  for (const Corner& c : r.corners) {
    corners.push_back(Json{{"availability", c.a},
                           {"race_preferences", c.pr},
                           {"education_preferences", c.pe},
                           {"min", number(c.value.lo)},
                           {"max", number(c.value.hi)},
                           {"n_feasible", c.n_feasible}});
  }
  j["corners"] = std::move(corners);
  return j;
}

Json envelope(const std::string& command, const std::vector<Input>& inputs, Json result,
              const std::vector<std::string>& diagnostics) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  Json in = Json::object();
  for (const Input& i : inputs) in[i.name] = Json{{"path", i.path}, {"checksum", file_checksum(i.path)}};
  j["inputs"] = std::move(in);
  j["result"] = std::move(result);
  j["diagnostics"] = diagnostics;
  return j;
}

Json error_envelope(const std::string& command, const std::string& category, const std::string& message, Json detail) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["error"] = Json{{"category", category}, {"message", message}};
  if (!detail.is_null()) j["error"]["detail"] = std::move(detail);
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace homogamy::report
