#include "homogamy/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace homogamy::oracle {

namespace {

constexpr double kTol = 1e-9;

bool integral(double x) { return std::isfinite(x) && std::abs(x) < 9.0e15 && std::trunc(x) == x; }

std::int64_t as_count(double v) {
  const double r = std::nearbyint(v);
  if (std::abs(v - r) > kTol * std::max(1.0, std::abs(v))) throw ValidationError("oracle needs integral availability");
  return static_cast<std::int64_t>(r);
}

// Tail sums: tail[i] = v[i] + ... + v[n-1], tail[n] = 0.
std::vector<double> tails(const Vector& v) {
  std::vector<double> t(static_cast<std::size_t>(v.size()) + 1, 0.0);
  for (auto i = static_cast<std::size_t>(v.size()); i-- > 0;) t[i] = t[i + 1] + v(static_cast<Eigen::Index>(i));
  return t;
}

struct Cut {
  double high_row;
  double high_col;
  double hh;
  double total;
};

Cut source_cut(const Matrix& s, Eigen::Index i, Eigen::Index j) {
  Cut c{0.0, 0.0, 0.0, 0.0};
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    for (Eigen::Index k = 0; k < s.cols(); ++k) {
      const double v = s(r, k);
      c.total += v;
      if (r >= i) c.high_row += v;
      if (k >= j) c.high_col += v;
      if (r >= i && k >= j) c.hh += v;
    }
  }
  return c;
}

bool degenerate(double high_row, double high_col, double total) {
  const double q = floor_product_ratio(high_row, high_col, total);
  return std::abs(std::min(high_row, high_col) - q) <= kTol * std::max(1.0, std::abs(total));
}

}  // namespace

double floor_product_ratio(double a, double b, double c) {
  if (!(c > 0.0)) throw ZeroTotal("oracle floor needs a positive total");
  if (integral(a) && integral(b) && integral(c)) {
    const __int128 num = static_cast<__int128>(static_cast<std::int64_t>(a)) * static_cast<std::int64_t>(b);
    const auto den = static_cast<__int128>(static_cast<std::int64_t>(c));
    __int128 q = num / den;
    if (num % den != 0 && num < 0) --q;
    return static_cast<double>(q);
  }
  const double q = a * b / c;
  const double r = std::nearbyint(q);
  if (std::abs(q - r) <= kTol * std::max(1.0, std::abs(q))) return r;
  return std::floor(q);
}

std::optional<double> liu_lu(double ll, double lh, double hl, double hh) {
  const double total = ll + lh + hl + hh;
  if (!(total > 0.0)) return std::nullopt;
  const double row = hl + hh;
  const double col = lh + hh;
  if (degenerate(row, col, total)) return std::nullopt;
  const double q = floor_product_ratio(row, col, total);
  return (hh - q) / (std::min(row, col) - q);
}

NmCheck verify_nm(const ContingencyTable& source, const Vector& row_targets, const Vector& col_targets,
                  const ContingencyTable& candidate) {
  NmCheck out;
  const Matrix& c = candidate.counts();
  for (Eigen::Index r = 0; r < c.rows(); ++r) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < c.cols(); ++k) s += c(r, k);
    out.max_row_deviation = std::max(out.max_row_deviation, std::abs(s - row_targets(r)));
  }
  for (Eigen::Index k = 0; k < c.cols(); ++k) {
    double s = 0.0;
    for (Eigen::Index r = 0; r < c.rows(); ++r) s += c(r, k);
    out.max_col_deviation = std::max(out.max_col_deviation, std::abs(s - col_targets(k)));
  }
  const Matrix& z = source.counts();
  for (Eigen::Index i = 1; i < z.rows(); ++i) {
    for (Eigen::Index j = 1; j < z.cols(); ++j) {
      const Cut a = source_cut(z, i, j);
      const auto want = liu_lu(a.total - a.high_row - a.high_col + a.hh, a.high_col - a.hh, a.high_row - a.hh, a.hh);
      if (!want) continue;
      const Cut b = source_cut(c, i, j);
      const auto got = liu_lu(b.total - b.high_row - b.high_col + b.hh, b.high_col - b.hh, b.high_row - b.hh, b.hh);
      ++out.cuts_compared;
      const double dev = got ? std::abs(*got - *want) : std::numeric_limits<double>::infinity();
      out.max_ll_deviation = std::max(out.max_ll_deviation, dev);
    }
  }
  return out;
}

Matrix nm_reference(const Matrix& source, const Vector& row_targets, const Vector& col_targets) {
  const Eigen::Index n = source.rows();
  const Eigen::Index m = source.cols();
  const std::vector<double> rt = tails(row_targets);
  const std::vector<double> ct = tails(col_targets);
  const double total = rt[0];
  // s(r, c): couples with husband index >= r and wife index >= c (0-based).
  Matrix s = Matrix::Zero(n + 1, m + 1);
  for (Eigen::Index r = 0; r <= n; ++r) s(r, 0) = rt[static_cast<std::size_t>(r)];
  for (Eigen::Index c = 1; c <= m; ++c) s(0, c) = ct[static_cast<std::size_t>(c)];
  for (Eigen::Index i = 1; i < n; ++i) {
    for (Eigen::Index j = 1; j < m; ++j) {
      const double r_tail = rt[static_cast<std::size_t>(i)];
      const double c_tail = ct[static_cast<std::size_t>(j)];
      if (!(total > 0.0)) {
        s(i, j) = 0.0;
        continue;
      }
      const double q = floor_product_ratio(r_tail, c_tail, total);
      const double lo = std::min(r_tail, c_tail);
      if (std::abs(lo - q) <= kTol * std::max(1.0, total)) {
        s(i, j) = q;
        continue;
      }
      const Cut a = source_cut(source, i, j);
      if (!(a.total > 0.0) || degenerate(a.high_row, a.high_col, a.total)) {
        throw DegenerateSourceCut("oracle: source cut is degenerate", static_cast<std::size_t>(i),
                                  static_cast<std::size_t>(j));
      }
      const double qs = floor_product_ratio(a.high_row, a.high_col, a.total);
      s(i, j) = q + (a.hh - qs) * ((lo - q) / (std::min(a.high_row, a.high_col) - qs));
    }
  }
  Matrix out(n, m);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < m; ++c) out(r, c) = s(r, c) - s(r + 1, c) - s(r, c + 1) + s(r + 1, c + 1);
  return out;
}

Matrix round_reference(const Matrix& x) {
  struct Frac {
    Eigen::Index r;
    Eigen::Index c;
    double f;
  };
  Matrix base(x.rows(), x.cols());
  std::vector<Frac> fr;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      double v = x(r, c);
      const double near = std::nearbyint(v);
      if (std::abs(v - near) <= kTol * std::max(1.0, std::abs(v))) v = near;
      base(r, c) = std::floor(v);
      if (v - base(r, c) > 0.0) fr.push_back({r, c, v - base(r, c)});
    }
  }
  if (fr.size() > 24) throw LatticeTooLarge("oracle rounding has too many fractional cells");
  Vector row_want(x.rows());
  Vector col_want(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) row_want(r) = static_cast<double>(as_count(x.row(r).sum()));
  for (Eigen::Index c = 0; c < x.cols(); ++c) col_want(c) = static_cast<double>(as_count(x.col(c).sum()));

  const std::size_t f = fr.size();
  bool found = false;
  double best = 0.0;
  std::uint64_t best_mask = 0;
  // Decreasing masks with cell 0 as the top bit: round-ups of earlier cells first.
  for (std::uint64_t mask = (std::uint64_t{1} << f); mask-- > 0;) {
    Matrix t = base;
    double score = 0.0;
    for (std::size_t k = 0; k < f; ++k) {
      if ((mask >> (f - 1 - k)) & 1u) {
        t(fr[k].r, fr[k].c) += 1.0;
        score += fr[k].f;
      }
    }
    bool ok = true;
    for (Eigen::Index r = 0; r < x.rows() && ok; ++r) ok = t.row(r).sum() == row_want(r);
    for (Eigen::Index c = 0; c < x.cols() && ok; ++c) ok = t.col(c).sum() == col_want(c);
    if (!ok) continue;
    if (!found || score > best + kTol) {
      found = true;
      best = score;
      best_mask = mask;
    }
  }
  if (!found) throw InfeasibleBlockTotals("oracle: no margin-preserving rounding");
  Matrix out = base;
  for (std::size_t k = 0; k < f; ++k)
    if ((best_mask >> (f - 1 - k)) & 1u) out(fr[k].r, fr[k].c) += 1.0;
  return out;
}

namespace {

using Vec = std::vector<std::int64_t>;

// Every vector with 0 <= v[k] <= caps[k] summing to total, lexicographically.
std::vector<Vec> bounded_vectors(std::int64_t total, const Vec& caps) {
  std::vector<Vec> out;
  Vec v(caps.size(), 0);
  std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t k, std::int64_t used) {
    if (k + 1 == caps.size()) {
      const std::int64_t last = total - used;
      if (last >= 0 && last <= caps[k]) {
        v[k] = last;
        out.push_back(v);
      }
      return;
    }
    for (std::int64_t a = 0; a <= caps[k]; ++a) {
      v[k] = a;
      rec(k + 1, used + a);
    }
  };
  if (total >= 0 && !caps.empty()) rec(0, 0);
  return out;
}

struct Avail {
  std::array<Vec, 2> male;
  std::array<Vec, 2> female;
};

Avail avail_of(const GnmProblem& p) {
  const RaceEduLayout& L = p.layout;
  Avail a;
  const Matrix& t = p.availability.counts();
  for (std::size_t race = 0; race < 2; ++race) {
    for (std::size_t k = 0; k < L.n_male_edu(); ++k)
      a.male[race].push_back(as_count(t.row(static_cast<Eigen::Index>(L.row_index(race, k))).sum()));
    for (std::size_t l = 0; l < L.n_female_edu(); ++l)
      a.female[race].push_back(as_count(t.col(static_cast<Eigen::Index>(L.col_index(race, l))).sum()));
  }
  return a;
}

Matrix step_one(const ContingencyTable& source_agg, const ContingencyTable& avail_agg, const GnmProblem& p) {
  const Matrix& a = avail_agg.counts();
  const Matrix raw = nm_reference(source_agg.counts(), a.rowwise().sum(), a.colwise().sum().transpose());
  if (!p.keep_negative && (raw.array() < -p.epsilon).any()) throw NoFeasiblePoint("oracle: step one is negative");
  return round_reference(raw);
}

struct Lattice {
  Matrix step1;
  std::vector<Vec> points;
};

Lattice race_first_points(const GnmProblem& p, std::uint64_t limit) {
  const Avail av = avail_of(p);
  Lattice lat;
  lat.step1 = step_one(race_aggregate(p.race_pref, p.layout), race_aggregate(p.availability, p.layout), p);
  const auto t_bw = static_cast<std::int64_t>(lat.step1(0, 1));
  const auto t_wb = static_cast<std::int64_t>(lat.step1(1, 0));
  const auto a_b = bounded_vectors(t_bw, av.male[0]);
  const auto a_w = bounded_vectors(t_wb, av.male[1]);
  const auto b_b = bounded_vectors(t_wb, av.female[0]);
  const auto b_w = bounded_vectors(t_bw, av.female[1]);
  const long double n = static_cast<long double>(a_b.size()) * a_w.size() * b_b.size() * b_w.size();
  if (n > static_cast<long double>(limit)) throw LatticeTooLarge("oracle lattice exceeds its limit");
  for (const auto& v0 : a_b)
    for (const auto& v1 : a_w)
      for (const auto& v2 : b_b)
        for (const auto& v3 : b_w) {
          Vec pt;
          for (const Vec* v : {&v0, &v1, &v2, &v3}) pt.insert(pt.end(), v->begin(), v->end());
          lat.points.push_back(std::move(pt));
        }
  return lat;
}

Lattice edu_first_points(const GnmProblem& p, std::uint64_t limit) {
  const Avail av = avail_of(p);
  const std::size_t n = p.layout.n_male_edu();
  const std::size_t m = p.layout.n_female_edu();
  Lattice lat;
  lat.step1 = step_one(edu_aggregate(p.edu_pref, p.layout), edu_aggregate(p.availability, p.layout), p);
  auto e = [&](std::size_t k, std::size_t l) {
    return static_cast<std::int64_t>(lat.step1(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)));
  };
  std::vector<std::vector<Vec>> rows(n);  // x row k over l
  std::vector<std::vector<Vec>> cols(m);  // y column l over k
  long double count = 1;
  for (std::size_t k = 0; k < n; ++k) {
    Vec caps;
    for (std::size_t l = 0; l < m; ++l) caps.push_back(std::max<std::int64_t>(0, std::min(e(k, l), av.male[0][k])));
    rows[k] = bounded_vectors(av.male[0][k], caps);
    count *= rows[k].size();
  }
  for (std::size_t l = 0; l < m; ++l) {
    Vec caps;
    for (std::size_t k = 0; k < n; ++k) caps.push_back(std::max<std::int64_t>(0, std::min(e(k, l), av.female[0][l])));
    cols[l] = bounded_vectors(av.female[0][l], caps);
    count *= cols[l].size();
  }
  if (count > static_cast<long double>(limit)) throw LatticeTooLarge("oracle lattice exceeds its limit");
  std::vector<std::size_t> pick(n + m, 0);
  std::function<void(std::size_t)> rec = [&](std::size_t d) {
    if (d == n + m) {
      Vec pt;
      for (std::size_t l = 0; l < m; ++l) {
        for (std::size_t k = 0; k < n; ++k) pt.push_back(rows[k][pick[k]][l]);
        for (std::size_t k = 0; k < n; ++k) pt.push_back(cols[l][pick[n + l]][k]);
      }
      lat.points.push_back(std::move(pt));
      return;
    }
    const std::size_t len = d < n ? rows[d].size() : cols[d - n].size();
    for (std::size_t i = 0; i < len; ++i) {
      pick[d] = i;
      rec(d + 1);
    }
  };
  rec(0);
  std::sort(lat.points.begin(), lat.points.end());
  return lat;
}

Matrix assemble_race_first(const GnmProblem& p, const Vec& pt) {
  const RaceEduLayout& L = p.layout;
  const Avail av = avail_of(p);
  const std::size_t n = L.n_male_edu();
  const std::size_t m = L.n_female_edu();
  const ContingencyTable& src = p.edu_source == EducationSource::EducationTime ? p.edu_pref : p.race_pref;
  Matrix out = Matrix::Zero(L.rows(), L.cols());
  for (std::size_t hr = 0; hr < 2; ++hr) {
    for (std::size_t wr = 0; wr < 2; ++wr) {
      Vector male(n);
      Vector female(m);
      for (std::size_t k = 0; k < n; ++k) {
        const std::int64_t moved = pt[hr * n + k];  // race-hr husbands married across the race line
        male(static_cast<Eigen::Index>(k)) = static_cast<double>(hr != wr ? moved : av.male[hr][k] - moved);
      }
      for (std::size_t l = 0; l < m; ++l) {
        const std::int64_t moved = pt[2 * n + wr * m + l];
        female(static_cast<Eigen::Index>(l)) = static_cast<double>(hr != wr ? moved : av.female[wr][l] - moved);
      }
      Matrix block(n, m);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < m; ++l)
          block(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = src(L.row_index(hr, k), L.col_index(wr, l));
      const Matrix cf = nm_reference(block, male, female);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < m; ++l)
          out(static_cast<Eigen::Index>(L.row_index(hr, k)), static_cast<Eigen::Index>(L.col_index(wr, l))) =
              cf(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
    }
  }
  return out;
}

Matrix assemble_edu_first(const GnmProblem& p, const Matrix& step1, const Vec& pt) {
  const RaceEduLayout& L = p.layout;
  const std::size_t n = L.n_male_edu();
  const std::size_t m = L.n_female_edu();
  Matrix out = Matrix::Zero(L.rows(), L.cols());
  for (std::size_t l = 0; l < m; ++l) {
    for (std::size_t k = 0; k < n; ++k) {
      const double e = step1(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
      const auto x = static_cast<double>(pt[l * 2 * n + k]);
      const auto y = static_cast<double>(pt[l * 2 * n + n + k]);
      Matrix block(2, 2);
      for (std::size_t hr = 0; hr < 2; ++hr)
        for (std::size_t wr = 0; wr < 2; ++wr)
          block(static_cast<Eigen::Index>(hr), static_cast<Eigen::Index>(wr)) =
              p.race_pref(L.row_index(hr, k), L.col_index(wr, l));
      Vector male(2);
      Vector female(2);
      male << x, e - x;
      female << y, e - y;
      const Matrix cf = nm_reference(block, male, female);
      for (std::size_t hr = 0; hr < 2; ++hr)
        for (std::size_t wr = 0; wr < 2; ++wr)
          out(static_cast<Eigen::Index>(L.row_index(hr, k)), static_cast<Eigen::Index>(L.col_index(wr, l))) =
              cf(static_cast<Eigen::Index>(hr), static_cast<Eigen::Index>(wr));
    }
  }
  return out;
}

Vec observed_point(const GnmProblem& p, SortOrder order) {
  const RaceEduLayout& L = p.layout;
  const ContingencyTable& t = p.availability;
  const std::size_t n = L.n_male_edu();
  const std::size_t m = L.n_female_edu();
  Vec pt;
  if (order == SortOrder::RaceFirst) {
    for (std::size_t hr = 0; hr < 2; ++hr)
      for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t l = 0; l < m; ++l) s += t(L.row_index(hr, k), L.col_index(1 - hr, l));
        pt.push_back(as_count(s));
      }
    for (std::size_t wr = 0; wr < 2; ++wr)
      for (std::size_t l = 0; l < m; ++l) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += t(L.row_index(1 - wr, k), L.col_index(wr, l));
        pt.push_back(as_count(s));
      }
    return pt;
  }
  for (std::size_t l = 0; l < m; ++l) {
    for (std::size_t k = 0; k < n; ++k)
      pt.push_back(as_count(t(L.row_index(0, k), L.col_index(0, l)) + t(L.row_index(0, k), L.col_index(1, l))));
    for (std::size_t k = 0; k < n; ++k)
      pt.push_back(as_count(t(L.row_index(0, k), L.col_index(0, l)) + t(L.row_index(1, k), L.col_index(0, l))));
  }
  return pt;
}

MomentInterval enumerate_order(const GnmProblem& p, SortOrder order, std::uint64_t limit) {
  const Lattice lat = order == SortOrder::RaceFirst ? race_first_points(p, limit) : edu_first_points(p, limit);
  MomentInterval out;
  out.order = order;
  out.step1 = lat.step1;
  out.n_lattice = lat.points.size();
  Vec observed;
  try {
    observed = observed_point(p, order);
  } catch (const ValidationError&) {
  }
  bool any = false;
  for (const Vec& pt : lat.points) {
    const Matrix t = order == SortOrder::RaceFirst ? assemble_race_first(p, pt) : assemble_edu_first(p, lat.step1, pt);
    if (!p.keep_negative && (t.array() < -p.epsilon).any()) {
      ++out.n_excluded_negative;
      continue;
    }
    ++out.n_feasible;
    const double v = p.objective == Objective::Sehc ? sehc(p.layout.make_table(t), p.layout)
                                                    : sirm(p.layout.make_table(t), p.layout);
    if (pt == observed) out.observed_value = v;
    if (!any || v < out.min_value) {
      out.min_value = v;
      out.argmin = AllocationPoint{order, pt};
    }
    if (!any || v > out.max_value) {
      out.max_value = v;
      out.argmax = AllocationPoint{order, pt};
    }
    any = true;
  }
  if (!any) throw NoFeasiblePoint("oracle: every allocation has a negative cell");
  return out;
}

}  // namespace

MomentInterval enumerate_gnm(const GnmProblem& p, std::uint64_t limit) {
  if (p.order != SortOrder::BothOrders) return enumerate_order(p, p.order, limit);
  MomentInterval race = enumerate_order(p, SortOrder::RaceFirst, limit);
  MomentInterval edu = enumerate_order(p, SortOrder::EducationFirst, limit);
  MomentInterval out;
  out.order = SortOrder::BothOrders;
  out.min_value = std::min(race.min_value, edu.min_value);
  out.max_value = std::max(race.max_value, edu.max_value);
  out.argmin = edu.min_value < race.min_value ? edu.argmin : race.argmin;
  out.argmax = edu.max_value > race.max_value ? edu.argmax : race.argmax;
  out.n_lattice = race.n_lattice + edu.n_lattice;
  out.n_feasible = race.n_feasible + edu.n_feasible;
  out.n_excluded_negative = race.n_excluded_negative + edu.n_excluded_negative;
  out.observed_value = race.observed_value ? race.observed_value : edu.observed_value;
  out.step1 = race.step1;
  out.per_order = {std::move(race), std::move(edu)};
  return out;
}

}  // namespace homogamy::oracle
