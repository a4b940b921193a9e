#include <algorithm>
#include <numeric>

#include "gnm_detail.hpp"
#include "homogamy/gnm.hpp"
#include "homogamy/rounding.hpp"

namespace homogamy {

namespace {

constexpr std::uint64_t kMaxMaterialized = 50'000'000;

std::vector<std::int64_t> suffix_caps(std::span<const std::int64_t> caps) {
  std::vector<std::int64_t> suf(caps.size() + 1, 0);
  for (std::size_t i = caps.size(); i-- > 0;) suf[i] = suf[i + 1] + std::max<std::int64_t>(caps[i], 0);
  return suf;
}

}  // namespace

CompositionSet::CompositionSet(std::int64_t total, std::vector<std::int64_t> caps)
    : dim_(caps.size()), total_(total), caps_(std::move(caps)) {
  if (dim_ == 0) return;
  const std::uint64_t n = count(total_, caps_);
  if (n == 0) return;
  if (n > kMaxMaterialized / dim_) {
    throw LatticeTooLarge("allocation vector set has " + std::to_string(n) + " members");
  }
  data_.reserve(n * dim_);
  const auto suf = suffix_caps(caps_);
  std::vector<std::int64_t> v(dim_, 0);
  // Iterative odometer over the tightened ranges; the last coordinate is forced.
  std::vector<std::int64_t> hi(dim_, 0);
  std::vector<std::int64_t> rem(dim_ + 1, 0);
  rem[0] = total_;
  std::size_t i = 0;
  auto init_from = [&](std::size_t from) {
    for (std::size_t k = from; k < dim_; ++k) {
      const std::int64_t lo = std::max<std::int64_t>(0, rem[k] - suf[k + 1]);
      hi[k] = std::min(caps_[k], rem[k]);
      v[k] = lo;
      rem[k + 1] = rem[k] - v[k];
    }
  };
  init_from(0);
  while (true) {
    data_.insert(data_.end(), v.begin(), v.end());
    i = dim_;
    while (i-- > 0) {
      if (v[i] < hi[i] && i + 1 < dim_) break;
    }
    if (i == static_cast<std::size_t>(-1)) break;
    ++v[i];
    rem[i + 1] = rem[i] - v[i];
    init_from(i + 1);
  }
}

std::uint64_t CompositionSet::count(std::int64_t total, std::span<const std::int64_t> caps) {
  if (total < 0 || caps.empty()) return 0;
  for (std::int64_t c : caps)
    if (c < 0) return 0;
  std::vector<std::uint64_t> ways(static_cast<std::size_t>(total) + 1, 0);
  ways[0] = 1;
  for (std::int64_t cap : caps) {
    // Sliding-window sum: next[s] = sum_{t=0..cap} ways[s-t].
    std::vector<std::uint64_t> next(ways.size(), 0);
    std::uint64_t window = 0;
    for (std::size_t s = 0; s < ways.size(); ++s) {
      window = detail::saturating_add(window, ways[s]);
      if (static_cast<std::int64_t>(s) - cap - 1 >= 0 && window != UINT64_MAX) {
        window -= ways[s - static_cast<std::size_t>(cap) - 1];
      }
      next[s] = window;
    }
    ways.swap(next);
  }
  return ways[static_cast<std::size_t>(total)];
}

std::optional<std::size_t> CompositionSet::index_of(std::span<const std::int64_t> v) const {
  if (v.size() != dim_ || dim_ == 0) return std::nullopt;
  std::size_t lo = 0;
  std::size_t hi = size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const auto row = (*this)[mid];
    if (std::lexicographical_compare(row.begin(), row.end(), v.begin(), v.end()))
      lo = mid + 1;
    else
      hi = mid;
  }
  if (lo < size() && std::equal(v.begin(), v.end(), (*this)[lo].begin())) return lo;
  return std::nullopt;
}

std::uint64_t RaceFirstLattice::size() const {
  std::uint64_t n = 1;
  for (const auto& part : parts) n = detail::saturating_mul(n, part.size());
  return n;
}

std::uint64_t EduFirstLattice::size() const {
  std::uint64_t n = 1;
  for (Eigen::Index k = 0; k < male_cap.rows(); ++k) {
    std::vector<std::int64_t> caps;
    for (Eigen::Index l = 0; l < male_cap.cols(); ++l) caps.push_back(male_cap(k, l));
    n = detail::saturating_mul(n, CompositionSet::count(male_avail[0][static_cast<std::size_t>(k)], caps));
  }
  for (Eigen::Index l = 0; l < female_cap.cols(); ++l) {
    std::vector<std::int64_t> caps;
    for (Eigen::Index k = 0; k < female_cap.rows(); ++k) caps.push_back(female_cap(k, l));
    n = detail::saturating_mul(n, CompositionSet::count(female_avail[0][static_cast<std::size_t>(l)], caps));
  }
  return n;
}

RaceFirstLattice race_first_lattice(const GnmProblem& p, const ContingencyTable& racial) {
  if (racial.rows() != 2 || racial.cols() != 2) throw DimensionMismatch("racial step table must be 2x2");
  const detail::Availability av = detail::availability_counts(p);
  RaceFirstLattice lat;
  lat.racial = round_preserving_margins(racial.counts());
  lat.male_avail = av.male;
  lat.female_avail = av.female;
  const auto t_bw = static_cast<std::int64_t>(lat.racial(0, 1));
  const auto t_wb = static_cast<std::int64_t>(lat.racial(1, 0));
  lat.parts[0] = CompositionSet(t_bw, av.male[0]);
  lat.parts[1] = CompositionSet(t_wb, av.male[1]);
  lat.parts[2] = CompositionSet(t_wb, av.female[0]);
  lat.parts[3] = CompositionSet(t_bw, av.female[1]);
  static constexpr const char* kNames[] = {"race-0 husbands", "race-1 husbands", "race-0 wives", "race-1 wives"};
  for (std::size_t i = 0; i < 4; ++i) {
    if (lat.parts[i].size() == 0) {
      throw InfeasibleBlockTotals(std::string("no allocation of ") + kNames[i] + " reaches inter-racial block total " +
                                  std::to_string(lat.parts[i].total()));
    }
  }
  return lat;
}

EduFirstLattice edu_first_lattice(const GnmProblem& p, const ContingencyTable& edu) {
  const std::size_t n = p.layout.n_male_edu();
  const std::size_t m = p.layout.n_female_edu();
  if (edu.rows() != n || edu.cols() != m) throw DimensionMismatch("education step table has the wrong shape");
  const detail::Availability av = detail::availability_counts(p);
  EduFirstLattice lat;
  lat.edu = round_preserving_margins(edu.counts());
  if ((lat.edu.array() < 0.0).any()) throw InfeasibleBlockTotals("rounded education step has a negative block total");
  lat.male_avail = av.male;
  lat.female_avail = av.female;
  lat.male_cap.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  lat.female_cap.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < m; ++l) {
      const auto e = static_cast<std::int64_t>(lat.edu(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)));
      lat.male_cap(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = std::min(e, av.male[0][k]);
      lat.female_cap(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = std::min(e, av.female[0][l]);
    }
  }
  if (lat.size() == 0) throw InfeasibleBlockTotals("no race split of the education blocks matches the availability");
  return lat;
}

namespace {

void for_each_edu_first(const EduFirstLattice& lat, const std::function<void(const AllocationPoint&)>& fn) {
  const auto n = static_cast<std::size_t>(lat.edu.rows());
  const auto m = static_cast<std::size_t>(lat.edu.cols());
  // later_x[k][l] = sum of male caps of row k in columns after l; later_y likewise down a column.
  std::vector<std::vector<std::int64_t>> later_x(n, std::vector<std::int64_t>(m + 1, 0));
  std::vector<std::vector<std::int64_t>> later_y(n + 1, std::vector<std::int64_t>(m, 0));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = m; l-- > 0;)
      later_x[k][l] = later_x[k][l + 1] + lat.male_cap(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
  for (std::size_t l = 0; l < m; ++l)
    for (std::size_t k = n; k-- > 0;)
      later_y[k][l] = later_y[k + 1][l] + lat.female_cap(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));

  AllocationPoint point{SortOrder::EducationFirst, std::vector<std::int64_t>(2 * n * m, 0)};
  std::vector<std::int64_t> row_rem = lat.male_avail[0];
  std::vector<std::int64_t> col_rem = lat.female_avail[0];

  // Coordinate c: column l = c / (2n); within the column first n are x, then n are y.
  const std::size_t dim = 2 * n * m;
  std::function<void(std::size_t)> rec = [&](std::size_t c) {
    if (c == dim) {
      fn(point);
      return;
    }
    const std::size_t l = c / (2 * n);
    const std::size_t r = c % (2 * n);
    const auto li = static_cast<Eigen::Index>(l);
    if (r < n) {
      const std::size_t k = r;
      const std::int64_t cap = lat.male_cap(static_cast<Eigen::Index>(k), li);
      const std::int64_t lo = std::max<std::int64_t>(0, row_rem[k] - later_x[k][l + 1]);
      const std::int64_t hi = std::min(cap, row_rem[k]);
      for (std::int64_t v = lo; v <= hi; ++v) {
        point.coords[c] = v;
        row_rem[k] -= v;
        rec(c + 1);
        row_rem[k] += v;
      }
    } else {
      const std::size_t k = r - n;
      const std::int64_t cap = lat.female_cap(static_cast<Eigen::Index>(k), li);
      const std::int64_t lo = std::max<std::int64_t>(0, col_rem[l] - later_y[k + 1][l]);
      const std::int64_t hi = std::min(cap, col_rem[l]);
      for (std::int64_t v = lo; v <= hi; ++v) {
        point.coords[c] = v;
        col_rem[l] -= v;
        rec(c + 1);
        col_rem[l] += v;
      }
    }
  };
  rec(0);
}

}  // namespace

void for_each_allocation(const GnmProblem& p, const ContingencyTable& step1, SortOrder order,
                         const std::function<void(const AllocationPoint&)>& fn) {
  if (order == SortOrder::EducationFirst) {
    for_each_edu_first(edu_first_lattice(p, step1), fn);
    return;
  }
  if (order != SortOrder::RaceFirst) throw ValidationError("allocations are enumerated for one order at a time");
  const RaceFirstLattice lat = race_first_lattice(p, step1);
  AllocationPoint point{SortOrder::RaceFirst, {}};
  for (std::size_t a = 0; a < lat.parts[0].size(); ++a) {
    for (std::size_t b = 0; b < lat.parts[1].size(); ++b) {
      for (std::size_t c = 0; c < lat.parts[2].size(); ++c) {
        for (std::size_t d = 0; d < lat.parts[3].size(); ++d) {
          point.coords.clear();
          for (const auto& [part, idx] : {std::pair{&lat.parts[0], a}, std::pair{&lat.parts[1], b},
                                          std::pair{&lat.parts[2], c}, std::pair{&lat.parts[3], d}}) {
            const auto v = (*part)[idx];
            point.coords.insert(point.coords.end(), v.begin(), v.end());
          }
          fn(point);
        }
      }
    }
  }
}

std::vector<AllocationPoint> enumerate_allocations(const GnmProblem& p, const ContingencyTable& racial,
                                                   std::uint64_t limit) {
  const RaceFirstLattice lat = race_first_lattice(p, racial);
  if (lat.size() > limit) {
    throw LatticeTooLarge("race-first lattice has " + std::to_string(lat.size()) + " points (limit " +
                          std::to_string(limit) + ")");
  }
  std::vector<AllocationPoint> out;
  out.reserve(lat.size());
  for_each_allocation(p, racial, SortOrder::RaceFirst, [&](const AllocationPoint& a) { out.push_back(a); });
  return out;
}

std::pair<ContingencyTable, std::vector<AllocationPoint>> education_first_step(const GnmProblem& p,
                                                                               std::uint64_t limit) {
  ContingencyTable edu = education_step(p);
  const EduFirstLattice lat = edu_first_lattice(p, edu);
  if (lat.size() > limit) {
    throw LatticeTooLarge("education-first lattice has " + std::to_string(lat.size()) + " points (limit " +
                          std::to_string(limit) + ")");
  }
  std::vector<AllocationPoint> out;
  out.reserve(lat.size());
  for_each_edu_first(lat, [&](const AllocationPoint& a) { out.push_back(a); });
  return {std::move(edu), std::move(out)};
}

}  // namespace homogamy
