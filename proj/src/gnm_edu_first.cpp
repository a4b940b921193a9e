#include <algorithm>

#include "gnm_detail.hpp"

namespace homogamy::detail {

namespace {

constexpr std::uint64_t kMaxStates = 50'000'000;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Cell {
  double max = -kInf;
  double min = kInf;
  std::uint64_t count = 0;

  void absorb(double max_value, double min_value, std::uint64_t n) {
    max = std::max(max, max_value);
    min = std::min(min, min_value);
    count = saturating_add(count, n);
  }
};

// Mixed-radix index over integer boxes [0, r_0) x ... x [0, r_{n-1}), first
// coordinate most significant, so increasing index is lexicographic order.
struct Box {
  std::vector<std::int64_t> radix;
  std::vector<std::size_t> stride;
  std::size_t size = 1;

  explicit Box(std::vector<std::int64_t> r) : radix(std::move(r)), stride(radix.size()) {
    std::uint64_t s = 1;
    for (std::size_t k = radix.size(); k-- > 0;) {
      stride[k] = static_cast<std::size_t>(s);
      s = saturating_mul(s, static_cast<std::uint64_t>(radix[k]));
    }
    if (s > kMaxStates) throw LatticeTooLarge("education-first search needs " + std::to_string(s) + " states");
    size = static_cast<std::size_t>(s);
  }
  void decode(std::size_t idx, std::vector<std::int64_t>& out) const {
    out.resize(radix.size());
    for (std::size_t k = 0; k < radix.size(); ++k) {
      out[k] = static_cast<std::int64_t>(idx / stride[k]);
      idx %= stride[k];
    }
  }
  std::size_t encode(const std::vector<std::int64_t>& v) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < radix.size(); ++k) idx += static_cast<std::size_t>(v[k]) * stride[k];
    return idx;
  }
};

class EduFirstSearch {
 public:
  EduFirstSearch(const GnmProblem& p, const EduFirstLattice& lat)
      : p_(p), lat_(lat), n_(static_cast<std::size_t>(lat.edu.rows())), m_(static_cast<std::size_t>(lat.edu.cols())) {
    const RaceEduLayout& L = p.layout;
    h_.resize(n_ * m_);
    for (std::size_t k = 0; k < n_; ++k) {
      for (std::size_t l = 0; l < m_; ++l) {
        const BlockEngine block(race_slice(p.race_pref, L, k, l), edu_block_weights(p, k, l), p.epsilon,
                                p.keep_negative, "block " + L.male_edu[k] + "-" + L.female_edu[l]);
        auto s = block.make_scratch();
        const double e = lat.edu(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
        const std::int64_t cx = capx(k, l);
        const std::int64_t cy = capy(k, l);
        auto& table = h_[k * m_ + l];
        table.assign(static_cast<std::size_t>((cx + 1) * (cy + 1)), kNaN);
        for (std::int64_t x = 0; x <= cx; ++x) {
          for (std::int64_t y = 0; y <= cy; ++y) {
            s.male = {static_cast<double>(x), e - static_cast<double>(x)};
            s.female = {static_cast<double>(y), e - static_cast<double>(y)};
            table[static_cast<std::size_t>(x * (cy + 1) + y)] = block.value(s);
          }
        }
      }
    }
  }

  SearchResult run() {
    std::vector<std::int64_t> rem_radix;
    for (std::size_t k = 0; k < n_; ++k) rem_radix.push_back(lat_.male_avail[0][k] + 1);
    rem_box_.emplace(rem_radix);

    for (std::size_t l = 0; l < m_; ++l) {
      std::vector<std::int64_t> r;
      for (std::size_t k = 0; k < n_; ++k) r.push_back(capx(k, l) + 1);
      xbox_.emplace_back(r);
      g_.push_back(column_values(l));
    }

    // value_[l][rem]: best completion of columns l.. with remaining row sums rem.
    value_.assign(m_ + 1, std::vector<Cell>());
    value_[m_].assign(rem_box_->size, Cell{});
    value_[m_][0] = Cell{0.0, 0.0, 1};
    std::vector<std::int64_t> rem;
    std::vector<std::int64_t> x;
    for (std::size_t l = m_; l-- > 0;) {
      value_[l].assign(rem_box_->size, Cell{});
      for (std::size_t ri = 0; ri < rem_box_->size; ++ri) {
        rem_box_->decode(ri, rem);
        Cell c;
        for_each_x(l, rem, x, [&](std::size_t xi) {
          const Cell& g = g_[l][xi];
          const Cell& v = value_[l + 1][ri - rest_offset(x)];
          if (g.count == 0 || v.count == 0) return false;
          c.absorb(g.max + v.max, g.min + v.min, saturating_mul(g.count, v.count));
          return false;
        });
        value_[l][ri] = c;
      }
    }

    SearchResult out;
    const std::size_t start = rem_box_->encode(lat_.male_avail[0]);
    const Cell& top = value_[0][start];
    out.n_feasible = top.count;
    if (top.count == 0) return out;
    out.best_max = top.max;
    out.best_min = top.min;
    out.argmax = reconstruct(true);
    out.argmin = reconstruct(false);
    return out;
  }

 private:
  std::int64_t capx(std::size_t k, std::size_t l) const {
    return lat_.male_cap(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
  }
  std::int64_t capy(std::size_t k, std::size_t l) const {
    return lat_.female_cap(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
  }
  double h(std::size_t k, std::size_t l, std::int64_t x, std::int64_t y) const {
    return h_[k * m_ + l][static_cast<std::size_t>(x * (capy(k, l) + 1) + y)];
  }
  std::size_t rest_offset(const std::vector<std::int64_t>& x) const { return rem_box_->encode(x); }

  // Visits x columns with x <= rem in lexicographic order; fn returns true to stop.
  template <typename Fn>
  void for_each_x(std::size_t l, const std::vector<std::int64_t>& rem, std::vector<std::int64_t>& x, Fn&& fn) const {
    const Box& box = xbox_[l];
    for (std::size_t xi = 0; xi < box.size; ++xi) {
      box.decode(xi, x);
      bool fits = true;
      for (std::size_t k = 0; k < n_ && fits; ++k) fits = x[k] <= rem[k];
      if (fits && fn(xi)) return;
    }
  }

  // suffix[k][s]: best over y_k..y_{n-1} summing to s for a fixed x column.
  std::vector<std::vector<Cell>> suffix_table(std::size_t l, const std::vector<std::int64_t>& x) const {
    const auto f = static_cast<std::size_t>(lat_.female_avail[0][l]);
    std::vector<std::vector<Cell>> suf(n_ + 1, std::vector<Cell>(f + 1));
    suf[n_][0] = Cell{0.0, 0.0, 1};
    for (std::size_t k = n_; k-- > 0;) {
      for (std::size_t s = 0; s <= f; ++s) {
        Cell c;
        for (std::int64_t y = 0; y <= capy(k, l) && static_cast<std::size_t>(y) <= s; ++y) {
          const double hv = h(k, l, x[k], y);
          const Cell& rest = suf[k + 1][s - static_cast<std::size_t>(y)];
          if (std::isnan(hv) || rest.count == 0) continue;
          c.absorb(hv + rest.max, hv + rest.min, rest.count);
        }
        suf[k][s] = c;
      }
    }
    return suf;
  }

  std::vector<Cell> column_values(std::size_t l) const {
    const Box& box = xbox_[l];
    const auto f = static_cast<std::size_t>(lat_.female_avail[0][l]);
    std::vector<Cell> out(box.size);
    std::vector<std::int64_t> x;
    for (std::size_t xi = 0; xi < box.size; ++xi) {
      box.decode(xi, x);
      out[xi] = suffix_table(l, x)[0][f];
    }
    return out;
  }

  bool near(double value, double target, bool maximize) const {
    return maximize ? value >= target - kTieTolerance : value <= target + kTieTolerance;
  }

  AllocationPoint reconstruct(bool maximize) const {
    AllocationPoint a{SortOrder::EducationFirst, {}};
    std::vector<std::int64_t> rem = lat_.male_avail[0];
    std::vector<std::int64_t> x;
    std::vector<std::int64_t> chosen;
    for (std::size_t l = 0; l < m_; ++l) {
      const std::size_t ri = rem_box_->encode(rem);
      const Cell& here = value_[l][ri];
      const double target = maximize ? here.max : here.min;
      for_each_x(l, rem, x, [&](std::size_t xi) {
        const Cell& g = g_[l][xi];
        const Cell& v = value_[l + 1][ri - rest_offset(x)];
        if (g.count == 0 || v.count == 0) return false;
        if (!near(maximize ? g.max + v.max : g.min + v.min, target, maximize)) return false;
        chosen = x;
        return true;
      });
      for (std::size_t k = 0; k < n_; ++k) rem[k] -= chosen[k];
      a.coords.insert(a.coords.end(), chosen.begin(), chosen.end());

      const auto suf = suffix_table(l, chosen);
      auto s = static_cast<std::size_t>(lat_.female_avail[0][l]);
      for (std::size_t k = 0; k < n_; ++k) {
        const double want = maximize ? suf[k][s].max : suf[k][s].min;
        for (std::int64_t y = 0; y <= capy(k, l) && static_cast<std::size_t>(y) <= s; ++y) {
          const double hv = h(k, l, chosen[k], y);
          const Cell& rest = suf[k + 1][s - static_cast<std::size_t>(y)];
          if (std::isnan(hv) || rest.count == 0) continue;
          if (!near(hv + (maximize ? rest.max : rest.min), want, maximize)) continue;
          a.coords.push_back(y);
          s -= static_cast<std::size_t>(y);
          break;
        }
      }
    }
    return a;
  }

  const GnmProblem& p_;
  const EduFirstLattice& lat_;
  std::size_t n_;
  std::size_t m_;
  std::vector<std::vector<double>> h_;  // per block (k,l): values over (x, y)
  std::optional<Box> rem_box_;
  std::vector<Box> xbox_;
  std::vector<std::vector<Cell>> g_;      // per column: best over y columns for each x column
  std::vector<std::vector<Cell>> value_;  // per column: best completion by remaining row sums
};

}  // namespace

SearchResult search_edu_first(const GnmProblem& p, const EduFirstLattice& lattice) {
  return EduFirstSearch(p, lattice).run();
}

}  // namespace homogamy::detail
