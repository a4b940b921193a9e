#include "homogamy/liulu.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace homogamy {

namespace {

constexpr double kSnapTolerance = 1e-9;
constexpr double kExactLimit = 9007199254740992.0;  // 2^53

bool exact_integer(double x) { return std::isfinite(x) && std::abs(x) < kExactLimit && std::trunc(x) == x; }

__int128 floor_div(__int128 num, __int128 den) {
  __int128 q = num / den;
  if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
  return q;
}

}  // namespace

std::string_view to_string(CutFlag flag) {
  switch (flag) {
    case CutFlag::Ok: return "ok";
    case CutFlag::NegativeAssortativity: return "negative_assortativity";
    case CutFlag::DegenerateDenominator: return "degenerate_denominator";
  }
  return "unknown";
}

double random_matching_floor(double high_row, double high_col, double total) {
  if (!(total > 0.0)) throw ZeroTotal("random matching count needs a positive total");
  if (exact_integer(high_row) && exact_integer(high_col) && exact_integer(total)) {
    if (high_row >= 0.0 && high_col >= 0.0 && high_row < 2147483648.0 && high_col < 2147483648.0) {
      const auto num = static_cast<long long>(high_row) * static_cast<long long>(high_col);
      return static_cast<double>(num / static_cast<long long>(total));
    }
    const __int128 num = static_cast<__int128>(static_cast<long long>(high_row)) *
                         static_cast<__int128>(static_cast<long long>(high_col));
    return static_cast<double>(floor_div(num, static_cast<long long>(total)));
  }
  const double q = high_row * high_col / total;
  const double nearest = std::nearbyint(q);
  if (std::abs(q - nearest) <= kSnapTolerance * std::max(1.0, std::abs(q))) return nearest;
  return std::floor(q);
}

bool is_degenerate_cut(double high_row, double high_col, double total) {
  const double qf = random_matching_floor(high_row, high_col, total);
  const double lo = std::min(high_row, high_col);
  return std::abs(lo - qf) <= kSnapTolerance * std::max(1.0, std::abs(total));
}

double TwoByTwo::q_floor() const { return random_matching_floor(high_row(), high_col(), total()); }

TwoByTwo cut_aggregate(const ContingencyTable& t, std::size_t i, std::size_t j) {
  const std::size_t n = t.rows();
  const std::size_t m = t.cols();
  if (i < 1 || i >= n || j < 1 || j >= m) {
    throw CutOutOfRange("cut (" + std::to_string(i) + "," + std::to_string(j) + ") outside 1.." +
                        std::to_string(n ? n - 1 : 0) + " x 1.." + std::to_string(m ? m - 1 : 0));
  }
  const auto& c = t.counts();
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(j);
  const auto nn = static_cast<Eigen::Index>(n);
  const auto mm = static_cast<Eigen::Index>(m);
  TwoByTwo z;
  z.ll = c.block(0, 0, ii, jj).sum();
  z.lh = c.block(0, jj, ii, mm - jj).sum();
  z.hl = c.block(ii, 0, nn - ii, jj).sum();
  z.hh = c.block(ii, jj, nn - ii, mm - jj).sum();
  return z;
}

LiuLuValue ll_simple(const TwoByTwo& z, std::size_t i, std::size_t j) {
  const double total = z.total();
  if (!(total > 0.0)) throw ZeroTotal("Liu-Lu measure needs a positive grand total");
  const double qf = z.q_floor();
  if (is_degenerate_cut(z.high_row(), z.high_col(), total)) {
    throw DegenerateDenominator(i, j, z.high_row(), z.high_col(), qf);
  }
  const double lo = std::min(z.high_row(), z.high_col());
  LiuLuValue out;
  out.value = (z.hh - qf) / (lo - qf);
  out.flag = z.hh < qf ? CutFlag::NegativeAssortativity : CutFlag::Ok;
  return out;
}

bool LiuLuMatrix::any_degenerate() const {
  return std::any_of(flags.begin(), flags.end(), [](CutFlag f) { return f == CutFlag::DegenerateDenominator; });
}

LiuLuMatrix ll_generalized(const ContingencyTable& t) {
  if (t.rows() < 2 || t.cols() < 2) throw DimensionMismatch("generalized Liu-Lu measure needs at least a 2x2 table");
  if (!(t.total() > 0.0)) throw ZeroTotal("Liu-Lu measure needs a positive grand total");
  const std::size_t nc = t.rows() - 1;
  const std::size_t mc = t.cols() - 1;
  LiuLuMatrix out;
  out.values = Matrix::Constant(nc, mc, std::numeric_limits<double>::quiet_NaN());
  out.flags.assign(nc * mc, CutFlag::Ok);
  for (std::size_t i = 1; i <= nc; ++i) {
    for (std::size_t j = 1; j <= mc; ++j) {
      try {
        const LiuLuValue v = ll_simple(cut_aggregate(t, i, j), i, j);
        out.values(i - 1, j - 1) = v.value;
        out.flags[(i - 1) * mc + (j - 1)] = v.flag;
      } catch (const DegenerateDenominator&) {
        out.flags[(i - 1) * mc + (j - 1)] = CutFlag::DegenerateDenominator;
      }
    }
  }
  return out;
}

}  // namespace homogamy
