#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define HOMOGAMY_X86_DISPATCH 1
#include <immintrin.h>
#endif

#include "gnm_detail.hpp"

namespace homogamy::detail {

namespace {

// Feasibility bitsets for all four blocks must fit in this many words.
constexpr std::uint64_t kMaxBitsetWords = 160'000'000;
// Per-block budget for tabulated cut sums.
constexpr std::uint64_t kMaxCutTableEntries = 24'000'000;
// Budget for cached male_W rows during the bound-and-prune pass.
constexpr std::uint64_t kMaxCachedValues = 32'000'000;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct MaxMin {
  double max = -kInf;
  double min = kInf;
};

MaxMin max_min_plus_scalar(const double* a, const double* b, std::size_t len) {
  MaxMin out;
  for (std::size_t i = 0; i < len; ++i) {
    const double s = a[i] + b[i];
    if (s > out.max) out.max = s;
    if (s < out.min) out.min = s;
  }
  return out;
}

std::uint64_t and_popcount_scalar(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  std::uint64_t c = 0;
  for (std::size_t w = 0; w < words; ++w) c += static_cast<std::uint64_t>(std::popcount(a[w] & b[w]));
  return c;
}

#if defined(HOMOGAMY_X86_DISPATCH)
__attribute__((target("avx2"))) MaxMin max_min_plus_avx2(const double* a, const double* b, std::size_t len) {
  __m256d mx = _mm256_set1_pd(-kInf);
  __m256d mn = _mm256_set1_pd(kInf);
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    const __m256d s = _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    // With a NaN first operand these return the second operand.
    mx = _mm256_max_pd(s, mx);
    mn = _mm256_min_pd(s, mn);
  }
  alignas(32) double hx[4];
  alignas(32) double hn[4];
  _mm256_store_pd(hx, mx);
  _mm256_store_pd(hn, mn);
  MaxMin out = max_min_plus_scalar(a + i, b + i, len - i);
  for (int k = 0; k < 4; ++k) {
    out.max = std::max(out.max, hx[k]);
    out.min = std::min(out.min, hn[k]);
  }
  return out;
}

__attribute__((target("popcnt"))) std::uint64_t and_popcount_hw(const std::uint64_t* a, const std::uint64_t* b,
                                                                 std::size_t words) {
  std::uint64_t c = 0;
  for (std::size_t w = 0; w < words; ++w) c += static_cast<std::uint64_t>(_mm_popcnt_u64(a[w] & b[w]));
  return c;
}

const bool kHasAvx2 = __builtin_cpu_supports("avx2");
const bool kHasPopcnt = __builtin_cpu_supports("popcnt");
#endif

// Max and min of a[i] + b[i] over entries where neither is NaN.
MaxMin max_min_plus(const double* a, const double* b, std::size_t len) {
#if defined(HOMOGAMY_X86_DISPATCH)
  if (kHasAvx2) return max_min_plus_avx2(a, b, len);
#endif
  return max_min_plus_scalar(a, b, len);
}

std::uint64_t and_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
#if defined(HOMOGAMY_X86_DISPATCH)
  if (kHasPopcnt) return and_popcount_hw(a, b, words);
#endif
  return and_popcount_scalar(a, b, words);
}

// Runs fn(begin, end) over contiguous chunks of [0, n) on up to `jobs` threads.
template <typename Fn>
void parallel_chunks(std::size_t n, unsigned jobs, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(jobs, n));
  if (workers == 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> threads;
  std::exception_ptr error;
  std::mutex error_mutex;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

// One racial block of the counterfactual, evaluated for every pairing of a
// male-side vector with a female-side vector. Cut sums are tabulated over the
// tail values the vectors actually reach, so the arithmetic is exactly that
// of NmKernel::apply followed by BlockEngine::value.
class FastBlock {
 public:
  struct Side {
    const CompositionSet* set = nullptr;
    const std::vector<std::int64_t>* avail = nullptr;  // non-null: targets are avail - v
  };

  FastBlock(const ContingencyTable& source, Matrix weights, double epsilon, bool keep_negative, std::string name,
            Side male, Side female)
      : kernel_(source),
        n_(source.rows()),
        m_(source.cols()),
        weights_(std::move(weights)),
        epsilon_(epsilon),
        keep_negative_(keep_negative),
        uniform_((weights_.array() == weights_(0, 0)).all()),
        name_(std::move(name)) {
    male_tails_ = tails(male, n_, male_count_);
    female_tails_ = tails(female, m_, female_count_);
    total_ = male_count_ ? male_tails_[0] : 0.0;
    if (total_ > 0.0) build_tables();
  }

  std::size_t male_count() const { return male_count_; }
  std::size_t female_count() const { return female_count_; }
  bool uniform_weights() const { return uniform_; }

  struct Scratch {
    std::vector<double> corner;
    std::vector<double> cells;
  };
  Scratch make_scratch() const { return {std::vector<double>((n_ + 1) * (m_ + 1)), std::vector<double>(n_ * m_)}; }

  /// Weighted cell sum, or NaN when a cell falls below -epsilon.
  double value(std::size_t a, std::size_t b, Scratch& s) const {
    if (!(total_ > 0.0)) return 0.0;
    const std::size_t w = m_ + 1;
    double* corner = s.corner.data();
    const double* rt = male_tails_.data() + a * (n_ + 1);
    const double* ct = female_tails_.data() + b * (m_ + 1);
    for (std::size_t c = 0; c <= m_; ++c) corner[n_ * w + c] = 0.0;
    for (std::size_t r = 0; r <= n_; ++r) {
      corner[r * w] = rt[r];
      corner[r * w + m_] = 0.0;
    }
    for (std::size_t c = 1; c < m_; ++c) corner[c] = ct[c];
    for (std::size_t i = 1; i < n_; ++i) {
      for (std::size_t j = 1; j < m_; ++j) {
        const std::size_t k = (i - 1) * (m_ - 1) + (j - 1);
        double v;
        if (tabulated_) {
          const auto ri = static_cast<std::size_t>(rt[i] - row_lo_[i]);
          const auto cj = static_cast<std::size_t>(ct[j] - col_lo_[j]);
          v = tables_[k][ri * col_span_[j] + cj];
        } else if (kernel_.cut_sum(i, j, rt[i], ct[j], total_, v) == NmKernel::Status::DegenerateSource) {
          v = kNaN;
        }
        if (std::isnan(v)) degenerate(i, j);
        corner[i * w + j] = v;
      }
    }
    double v = 0.0;
    for (std::size_t r = 0; r < n_; ++r) {
      for (std::size_t c = 0; c < m_; ++c) {
        const double x = corner[r * w + c] - corner[(r + 1) * w + c] - corner[r * w + c + 1] +
                         corner[(r + 1) * w + c + 1];
        if (!keep_negative_ && x < -epsilon_) return kNaN;
        v += weights_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * x;
      }
    }
    return v;
  }

  /// Values against every female vector, with feasibility bits.
  void row(std::size_t a, Scratch& s, double* out, std::uint64_t* bits) const {
    const std::size_t words = (female_count_ + 63) / 64;
    if (bits) std::fill(bits, bits + words, 0);
    for (std::size_t b = 0; b < female_count_; ++b) {
      out[b] = value(a, b, s);
      if (bits && !std::isnan(out[b])) bits[b / 64] |= std::uint64_t{1} << (b % 64);
    }
  }

 private:
  // Tail sums of the target vectors, (dim + 1) per vector, as NmKernel forms them.
  static std::vector<double> tails(Side side, std::size_t dim, std::size_t& count) {
    count = side.set->size();
    std::vector<double> t(count * (dim + 1), 0.0);
    for (std::size_t a = 0; a < count; ++a) {
      const auto v = (*side.set)[a];
      double* out = t.data() + a * (dim + 1);
      for (std::size_t r = dim; r-- > 0;) {
        const std::int64_t x = side.avail ? (*side.avail)[r] - v[r] : v[r];
        out[r] = out[r + 1] + static_cast<double>(x);
      }
    }
    return t;
  }

  static void span_of(const std::vector<double>& t, std::size_t dim, std::size_t count, std::size_t r,
                      double& lo, std::size_t& span) {
    double hi = t[r];
    lo = t[r];
    for (std::size_t a = 0; a < count; ++a) {
      lo = std::min(lo, t[a * (dim + 1) + r]);
      hi = std::max(hi, t[a * (dim + 1) + r]);
    }
    span = static_cast<std::size_t>(hi - lo) + 1;
  }

  void build_tables() {
    row_lo_.assign(n_, 0.0);
    row_span_.assign(n_, 0);
    col_lo_.assign(m_, 0.0);
    col_span_.assign(m_, 0);
    for (std::size_t i = 1; i < n_; ++i) span_of(male_tails_, n_, male_count_, i, row_lo_[i], row_span_[i]);
    for (std::size_t j = 1; j < m_; ++j) span_of(female_tails_, m_, female_count_, j, col_lo_[j], col_span_[j]);
    std::uint64_t entries = 0;
    for (std::size_t i = 1; i < n_; ++i)
      for (std::size_t j = 1; j < m_; ++j)
        entries = saturating_add(entries, saturating_mul(row_span_[i], col_span_[j]));
    if (entries > kMaxCutTableEntries) return;
    tables_.resize((n_ - 1) * (m_ - 1));
    for (std::size_t i = 1; i < n_; ++i) {
      for (std::size_t j = 1; j < m_; ++j) {
        std::vector<double>& t = tables_[(i - 1) * (m_ - 1) + (j - 1)];
        t.assign(row_span_[i] * col_span_[j], 0.0);
        for (std::size_t ri = 0; ri < row_span_[i]; ++ri) {
          for (std::size_t cj = 0; cj < col_span_[j]; ++cj) {
            double v = kNaN;
            const double rt = row_lo_[i] + static_cast<double>(ri);
            const double ct = col_lo_[j] + static_cast<double>(cj);
            if (kernel_.cut_sum(i, j, rt, ct, total_, v) == NmKernel::Status::DegenerateSource) v = kNaN;
            t[ri * col_span_[j] + cj] = v;
          }
        }
      }
    }
    tabulated_ = true;
  }

  [[noreturn]] void degenerate(std::size_t i, std::size_t j) const {
    throw DegenerateSourceCut(name_ + ": education-preference source has a degenerate Liu-Lu denominator at cut (" +
                                  std::to_string(i) + "," + std::to_string(j) + ")",
                              i, j);
  }

  NmKernel kernel_;
  std::size_t n_;
  std::size_t m_;
  Matrix weights_;
  double epsilon_;
  bool keep_negative_;
  bool uniform_;
  std::string name_;
  std::size_t male_count_ = 0;
  std::size_t female_count_ = 0;
  std::vector<double> male_tails_;
  std::vector<double> female_tails_;
  double total_ = 0.0;
  bool tabulated_ = false;
  std::vector<double> row_lo_;
  std::vector<std::size_t> row_span_;
  std::vector<double> col_lo_;
  std::vector<std::size_t> col_span_;
  std::vector<std::vector<double>> tables_;
};

// The objective splits over the 4-cycle male_B - female_B - male_W - female_W:
//   value = [BW(mB, fW) + WW(mW, fW)] + [BB(mB, fB) + WB(mW, fB)].
// For a fixed (male_B, male_W) pair the two brackets are maximized
// independently over the female vectors. Pairs are visited best bound first,
// where the bound adds the per-vector extremes of each block, and a pair is
// skipped only when its bound is below the incumbent by more than the tie
// tolerance, so the optimum and the tie-broken optimizer are exact.
class RaceFirstSearch {
 public:
  RaceFirstSearch(const GnmProblem& p, const RaceFirstLattice& lat) : p_(p), lat_(lat) {
    const ContingencyTable& src = p.edu_source == EducationSource::EducationTime ? p.edu_pref : p.race_pref;
    const RaceEduLayout& L = p.layout;
    for (std::size_t i = 0; i < 4; ++i) size_[i] = lat.parts[i].size();
    for (std::size_t hr = 0; hr < 2; ++hr) {
      for (std::size_t wr = 0; wr < 2; ++wr) {
        const bool same = hr == wr;
        blocks_.emplace_back(block_extract(src, L, hr, wr), race_block_weights(p, hr, wr), p.epsilon, p.keep_negative,
                             "block " + L.races[hr] + "-" + L.races[wr],
                             FastBlock::Side{&lat.parts[hr], same ? &lat.male_avail[hr] : nullptr},
                             FastBlock::Side{&lat.parts[2 + wr], same ? &lat.female_avail[wr] : nullptr});
      }
    }
    constant_ = std::all_of(blocks_.begin(), blocks_.end(), [](const FastBlock& b) { return b.uniform_weights(); });
    for (std::size_t b = 0; b < 4; ++b) scratch_[b] = blocks_[b].make_scratch();
    words_[2] = (size_[2] + 63) / 64;
    words_[3] = (size_[3] + 63) / 64;
  }

  SearchResult run() {
    const std::uint64_t words = saturating_mul(saturating_add(size_[0], size_[1]), words_[2] + words_[3]);
    if (words > kMaxBitsetWords) {
      throw LatticeTooLarge("race-first search needs " + std::to_string(words) + " feasibility words");
    }
    scan_blocks();
    SearchResult out;
    out.n_feasible = count_feasible();
    if (out.n_feasible == 0) return out;
    if (constant_) {
      out.argmax = out.argmin = first_feasible();
      out.best_max = out.best_min = 0.0;
      return out;
    }
    out.best_max = best(1.0);
    out.argmax = locate(out.best_max, 1.0);
    out.best_min = -best(-1.0);
    out.argmin = locate(-out.best_min, -1.0);
    return out;
  }

 private:
  enum Block { BB = 0, BW = 1, WB = 2, WW = 3 };

  struct Extremes {
    double max = -kInf;
    double min = kInf;
    std::uint64_t feasible = 0;
  };

  // Blocks indexed by male side: male_B owns BB and BW, male_W owns WB and WW.
  // For block b, the female part is 2 + b % 2.
  static std::size_t female_part(std::size_t b) { return 2 + b % 2; }
  std::uint64_t* bits(std::size_t b, std::size_t a) { return bits_[b].data() + a * words_[female_part(b)]; }
  const std::uint64_t* bits(std::size_t b, std::size_t a) const {
    return bits_[b].data() + a * words_[female_part(b)];
  }

  void scan_blocks() {
    for (std::size_t b = 0; b < 4; ++b) {
      const std::size_t nm = size_[b / 2];
      const std::size_t nf = size_[female_part(b)];
      bits_[b].assign(nm * words_[female_part(b)], 0);
      ext_[b].assign(nm, Extremes{});
      parallel_chunks(nm, p_.jobs, [&](std::size_t begin, std::size_t end) {
        FastBlock::Scratch s = blocks_[b].make_scratch();
        std::vector<double> vals(nf);
        for (std::size_t a = begin; a < end; ++a) {
          blocks_[b].row(a, s, vals.data(), bits(b, a));
          Extremes& e = ext_[b][a];
          for (double v : vals) {
            if (std::isnan(v)) continue;
            ++e.feasible;
            e.max = std::max(e.max, v);
            e.min = std::min(e.min, v);
          }
        }
      });
    }
  }

  bool full(std::size_t b, std::size_t a) const { return ext_[b][a].feasible == size_[female_part(b)]; }

  // Feasible (female_W, female_B) counts for one (male_B, male_W) pair.
  std::pair<std::uint64_t, std::uint64_t> pair_counts(std::size_t i0, std::size_t i1) const {
    std::uint64_t c1;
    if (full(WW, i1)) c1 = ext_[BW][i0].feasible;
    else if (full(BW, i0)) c1 = ext_[WW][i1].feasible;
    else c1 = and_popcount(bits(BW, i0), bits(WW, i1), words_[3]);
    if (c1 == 0) return {0, 0};
    std::uint64_t c2;
    if (full(WB, i1)) c2 = ext_[BB][i0].feasible;
    else if (full(BB, i0)) c2 = ext_[WB][i1].feasible;
    else c2 = and_popcount(bits(BB, i0), bits(WB, i1), words_[2]);
    return {c1, c2};
  }

  bool alive0(std::size_t i0) const { return ext_[BB][i0].feasible && ext_[BW][i0].feasible; }
  bool alive1(std::size_t i1) const { return ext_[WB][i1].feasible && ext_[WW][i1].feasible; }

  std::uint64_t count_feasible() const {
    std::vector<std::uint64_t> partial(size_[0], 0);
    parallel_chunks(size_[0], p_.jobs, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i0 = begin; i0 < end; ++i0) {
        if (!alive0(i0)) continue;
        unsigned __int128 sum = 0;
        for (std::size_t i1 = 0; i1 < size_[1]; ++i1) {
          if (!alive1(i1)) continue;
          const auto [c1, c2] = pair_counts(i0, i1);
          sum += static_cast<unsigned __int128>(c1) * c2;
        }
        partial[i0] = sum > std::numeric_limits<std::uint64_t>::max() ? std::numeric_limits<std::uint64_t>::max()
                                                                       : static_cast<std::uint64_t>(sum);
      }
    });
    std::uint64_t total = 0;
    for (std::uint64_t c : partial) total = saturating_add(total, c);
    return total;
  }

  static std::size_t first_common(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
    for (std::size_t w = 0; w < words; ++w)
      if (const std::uint64_t x = a[w] & b[w]) return w * 64 + static_cast<std::size_t>(std::countr_zero(x));
    return words * 64;
  }

  AllocationPoint point(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) const {
    AllocationPoint a{SortOrder::RaceFirst, {}};
    for (const auto& [part, idx] : {std::pair{0, i0}, std::pair{1, i1}, std::pair{2, i2}, std::pair{3, i3}}) {
      const auto v = lat_.parts[static_cast<std::size_t>(part)][idx];
      a.coords.insert(a.coords.end(), v.begin(), v.end());
    }
    return a;
  }

  AllocationPoint first_feasible() const {
    for (std::size_t i0 = 0; i0 < size_[0]; ++i0) {
      if (!alive0(i0)) continue;
      for (std::size_t i1 = 0; i1 < size_[1]; ++i1) {
        if (!alive1(i1)) continue;
        const auto [c1, c2] = pair_counts(i0, i1);
        if (c1 == 0 || c2 == 0) continue;
        return point(i0, i1, first_common(bits(BB, i0), bits(WB, i1), words_[2]),
                     first_common(bits(BW, i0), bits(WW, i1), words_[3]));
      }
    }
    throw std::logic_error("race-first search found no feasible point after counting some");
  }

  // Block values of one male vector against every female vector (NaN when infeasible).
  struct Rows {
    std::vector<double> to_b;  // against female_B: BB for male_B, WB for male_W
    std::vector<double> to_w;  // against female_W: BW for male_B, WW for male_W
  };

  void fill_male_b(std::size_t i0, Rows& r) {
    r.to_b.resize(size_[2]);
    r.to_w.resize(size_[3]);
    blocks_[BB].row(i0, scratch_[BB], r.to_b.data(), nullptr);
    blocks_[BW].row(i0, scratch_[BW], r.to_w.data(), nullptr);
  }

  const Rows& male_w_rows(std::size_t i1) {
    if (auto it = cache_.find(i1); it != cache_.end()) return it->second;
    const std::uint64_t per_row = size_[2] + size_[3];
    if (per_row * (cache_.size() + 1) > kMaxCachedValues) cache_.clear();
    Rows& r = cache_[i1];
    r.to_b.resize(size_[2]);
    r.to_w.resize(size_[3]);
    blocks_[WB].row(i1, scratch_[WB], r.to_b.data(), nullptr);
    blocks_[WW].row(i1, scratch_[WW], r.to_w.data(), nullptr);
    return r;
  }

  // Signed halves of the best value for one pair; NaN when the pair has no
  // feasible completion. sign = -1 turns minimization into maximization.
  struct Halves {
    double w = kNaN;  // BW + WW, over female_W
    double b = kNaN;  // BB + WB, over female_B
    bool feasible() const { return !std::isnan(w) && !std::isnan(b); }
  };

  static double signed_extreme(const std::vector<double>& x, const std::vector<double>& y, double sign) {
    const MaxMin m = max_min_plus(x.data(), y.data(), x.size());
    if (m.max == -kInf) return kNaN;
    return sign > 0 ? m.max : -m.min;
  }

  static Halves halves(const Rows& r0, const Rows& r1, double sign) {
    return {signed_extreme(r0.to_w, r1.to_w, sign), signed_extreme(r0.to_b, r1.to_b, sign)};
  }

  // Per-vector bounds on the signed value each male vector can contribute.
  std::array<std::vector<double>, 2> bounds(double sign) const {
    std::array<std::vector<double>, 2> out{std::vector<double>(size_[0], -kInf), std::vector<double>(size_[1], -kInf)};
    for (std::size_t side = 0; side < 2; ++side) {
      const std::size_t bb = side == 0 ? BB : WB;
      const std::size_t bw = side == 0 ? BW : WW;
      for (std::size_t a = 0; a < size_[side]; ++a) {
        const Extremes& x = ext_[bb][a];
        const Extremes& y = ext_[bw][a];
        if (!x.feasible || !y.feasible) continue;
        out[side][a] = sign > 0 ? x.max + y.max : -(x.min + y.min);
      }
    }
    return out;
  }

  static std::vector<std::size_t> by_bound(const std::vector<double>& bound) {
    std::vector<std::size_t> order;
    for (std::size_t a = 0; a < bound.size(); ++a)
      if (bound[a] > -kInf) order.push_back(a);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return bound[x] > bound[y]; });
    return order;
  }

  // Bounds and values are sums in different orders; the slack absorbs the
  // rounding difference so no pair within the tie tolerance is skipped.
  static double threshold(double target) {
    return target - kTieTolerance - 1e-12 * (1.0 + std::abs(target));
  }

  double best(double sign) {
    const auto [a0, a1] = bounds(sign);
    const std::vector<std::size_t> o0 = by_bound(a0);
    const std::vector<std::size_t> o1 = by_bound(a1);
    double incumbent = -kInf;
    Rows r0;
    for (std::size_t i0 : o0) {
      if (a0[i0] + a1[o1.front()] < threshold(incumbent)) break;
      fill_male_b(i0, r0);
      for (std::size_t i1 : o1) {
        if (a0[i0] + a1[i1] < threshold(incumbent)) break;
        const Halves h = halves(r0, male_w_rows(i1), sign);
        if (h.feasible()) incumbent = std::max(incumbent, h.w + h.b);
      }
    }
    return incumbent;
  }

  // Lexicographically first point whose signed value is within the tie
  // tolerance of the signed optimum.
  AllocationPoint locate(double target, double sign) {
    const auto [a0, a1] = bounds(sign);
    const std::vector<std::size_t> o1 = by_bound(a1);
    const double thr = threshold(target);
    const double want = target - kTieTolerance;
    Rows r0;
    std::vector<std::size_t> cand;
    for (std::size_t i0 = 0; i0 < size_[0]; ++i0) {
      if (a0[i0] == -kInf || a0[i0] + a1[o1.front()] < thr) continue;
      cand.clear();
      for (std::size_t i1 : o1) {
        if (a0[i0] + a1[i1] < thr) break;
        cand.push_back(i1);
      }
      std::sort(cand.begin(), cand.end());
      fill_male_b(i0, r0);
      for (std::size_t i1 : cand) {
        const Rows& r1 = male_w_rows(i1);
        const Halves h = halves(r0, r1, sign);
        if (!h.feasible() || h.w + h.b < want) continue;
        std::size_t i2 = 0;
        double b2 = kNaN;
        for (; i2 < size_[2]; ++i2) {
          b2 = sign * (r0.to_b[i2] + r1.to_b[i2]);
          if (!std::isnan(b2) && h.w + b2 >= want) break;
        }
        std::size_t i3 = 0;
        for (; i3 < size_[3]; ++i3) {
          const double w3 = sign * (r0.to_w[i3] + r1.to_w[i3]);
          if (!std::isnan(w3) && w3 + b2 >= want) break;
        }
        return point(i0, i1, i2, i3);
      }
    }
    throw std::logic_error("race-first search lost its optimum");
  }

  const GnmProblem& p_;
  const RaceFirstLattice& lat_;
  std::vector<FastBlock> blocks_;
  bool constant_ = false;
  std::array<std::size_t, 4> size_{};
  std::array<std::size_t, 4> words_{};
  std::array<std::vector<std::uint64_t>, 4> bits_;
  std::array<std::vector<Extremes>, 4> ext_;
  std::array<FastBlock::Scratch, 4> scratch_;
  std::unordered_map<std::size_t, Rows> cache_;
};

}  // namespace

SearchResult search_race_first(const GnmProblem& p, const RaceFirstLattice& lattice) {
  return RaceFirstSearch(p, lattice).run();
}

}  // namespace homogamy::detail
