#include <doctest.h>

#include <cmath>

#include "homogamy/liulu.hpp"
#include "homogamy/oracle.hpp"
#include "support.hpp"

using namespace homogamy;
using homogamy::testing::Rng;

namespace {

TwoByTwo z(double ll, double lh, double hl, double hh) { return {ll, lh, hl, hh}; }

Matrix diag3(double a, double b, double c) {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << a, b, c;
  return d;
}

}  // namespace

TEST_CASE("random-matching floor") {
  CHECK(random_matching_floor(60, 60, 100) == 36);
  CHECK(random_matching_floor(7, 5, 3) == 11);
  CHECK(random_matching_floor(20, 10, 30) == 6);
  // Floating residue around an integral quotient snaps to it.
  CHECK(random_matching_floor(0.1 * 3 * 10, 10, 3) == 10);
  CHECK(random_matching_floor(3e9, 3e9, 7) == static_cast<double>(1285714285714285714LL));
  CHECK(random_matching_floor(2.5, 3.0, 2.0) == 3);
}

TEST_CASE("cut aggregation") {
  const ContingencyTable d(diag3(10, 10, 10));
  const TwoByTwo c11 = cut_aggregate(d, 1, 1);
  CHECK((c11.ll == 10 && c11.lh == 0 && c11.hl == 0 && c11.hh == 20));
  const TwoByTwo c12 = cut_aggregate(d, 1, 2);
  CHECK((c12.ll == 10 && c12.lh == 0 && c12.hl == 10 && c12.hh == 10));
  const TwoByTwo same = cut_aggregate(ContingencyTable::from_rows({{1, 2}, {3, 4}}), 1, 1);
  CHECK((same.ll == 1 && same.lh == 2 && same.hl == 3 && same.hh == 4));
  CHECK_THROWS_AS(cut_aggregate(d, 0, 1), CutOutOfRange);
  CHECK_THROWS_AS(cut_aggregate(d, 1, 3), CutOutOfRange);
}

TEST_CASE("simplified measure fixtures") {
  const double fixture = 14.0 / 24.0;  // frozen from oracle::liu_lu(30, 10, 10, 50)
  CHECK(oracle::liu_lu(30, 10, 10, 50).value() == fixture);
  const LiuLuValue v = ll_simple(z(30, 10, 10, 50));
  CHECK(v.value == fixture);
  CHECK(v.flag == CutFlag::Ok);
  CHECK(ll_simple(z(16, 24, 24, 36)).value == 0.0);
  CHECK(ll_simple(z(40, 0, 0, 60)).value == 1.0);
}

TEST_CASE("negative sorting is flagged") {
  const LiuLuValue v = ll_simple(z(10, 30, 30, 30));
  CHECK(v.flag == CutFlag::NegativeAssortativity);
  CHECK(v.value < 0.0);
  CHECK(v.value == oracle::liu_lu(10, 30, 30, 30).value());
}

TEST_CASE("degenerate denominator") {
  CHECK_THROWS_AS(ll_simple(z(10, 0, 0, 0)), DegenerateDenominator);
  CHECK_THROWS_AS(ll_simple(z(5, 5, 0, 0)), DegenerateDenominator);
  try {
    ll_simple(z(0, 10, 0, 10), 2, 3);
    FAIL("expected DegenerateDenominator");
  } catch (const DegenerateDenominator& e) {
    CHECK(e.cut_row() == 2);
    CHECK(e.cut_col() == 3);
    CHECK(e.high_col() == 20);
  }
  CHECK_THROWS_AS(ll_simple(z(0, 0, 0, 0)), ZeroTotal);
  CHECK(is_degenerate_cut(10, 20, 20));
  CHECK_FALSE(is_degenerate_cut(10, 10, 20));
}

TEST_CASE("simplified measure equals the definition on random tables") {
  Rng rng(21);
  for (int trial = 0; trial < 2000; ++trial) {
    const Matrix m = testing::random_int_matrix(rng, 2, 2, 0, trial < 1000 ? 12 : 100000);
    const TwoByTwo t = z(m(0, 0), m(0, 1), m(1, 0), m(1, 1));
    const std::optional<double> want = oracle::liu_lu(t.ll, t.lh, t.hl, t.hh);
    if (t.total() == 0.0) {
      CHECK_THROWS_AS(ll_simple(t), ZeroTotal);
    } else if (!want) {
      CHECK_THROWS_AS(ll_simple(t), DegenerateDenominator);
    } else {
      const LiuLuValue got = ll_simple(t);
      CHECK(got.value == *want);
      CHECK((got.flag == CutFlag::NegativeAssortativity) == (*want < 0.0));
      CHECK(got.value <= 1.0);
      CHECK((got.value == 1.0) == (t.hh == std::min(t.high_row(), t.high_col())));
    }
  }
}

TEST_CASE("generalized measure") {
  SUBCASE("perfect sorting") {
    const LiuLuMatrix ll = ll_generalized(ContingencyTable(diag3(10, 10, 10)));
    CHECK(ll.values == Matrix::Ones(2, 2));
    CHECK_FALSE(ll.any_degenerate());
  }
  SUBCASE("two by two") {
    const LiuLuMatrix ll = ll_generalized(ContingencyTable::from_rows({{30, 10}, {10, 50}}));
    CHECK(ll.cut_rows() == 1);
    CHECK(ll.at(1, 1) == ll_simple(z(30, 10, 10, 50)).value);
  }
  SUBCASE("independence scores zero") {
    const LiuLuMatrix ll = ll_generalized(ContingencyTable::from_rows({{16, 24}, {24, 36}}));
    CHECK(ll.at(1, 1) == 0.0);
    // Rank-one 3x3 table: zero up to the flooring of the expected count.
    Matrix outer = Vector::LinSpaced(3, 10, 30) * Vector::LinSpaced(3, 10, 30).transpose() / 60.0;
    const LiuLuMatrix lo = ll_generalized(ContingencyTable(outer));
    for (std::size_t i = 1; i <= 2; ++i)
      for (std::size_t j = 1; j <= 2; ++j) {
        const TwoByTwo c = cut_aggregate(ContingencyTable(outer), i, j);
        CHECK(lo.at(i, j) == oracle::liu_lu(c.ll, c.lh, c.hl, c.hh).value());
        CHECK(std::abs(lo.at(i, j)) < 0.1);
      }
  }
  SUBCASE("degenerate cuts are recorded, not thrown") {
    Matrix m = Matrix::Zero(3, 3);
    m(0, 0) = 5;
    m(1, 1) = 5;
    const LiuLuMatrix ll = ll_generalized(ContingencyTable(m));
    CHECK(ll.flag(2, 2) == CutFlag::DegenerateDenominator);
    CHECK(std::isnan(ll.at(2, 2)));
    CHECK(ll.flag(1, 1) == CutFlag::Ok);
    CHECK(ll.any_degenerate());
  }
}

TEST_CASE("merging deletes the cuts interior to a group") {
  Rng rng(22);
  for (int trial = 0; trial < 300; ++trial) {
    const ContingencyTable t(testing::random_int_matrix(rng, 5, 5, 1, 20));
    const Partition rg = testing::random_contiguous_partition(rng, 5);
    const Partition cg = testing::random_contiguous_partition(rng, 5);
    if (rg.size() < 2 || cg.size() < 2) continue;
    const LiuLuMatrix full = ll_generalized(t);
    const LiuLuMatrix merged = ll_generalized(merge_categories(t, rg, cg));
    for (std::size_t gi = 1; gi < rg.size(); ++gi) {
      for (std::size_t gj = 1; gj < cg.size(); ++gj) {
        const std::size_t i = rg[gi - 1].back() + 1;
        const std::size_t j = cg[gj - 1].back() + 1;
        CHECK(merged.flag(gi, gj) == full.flag(i, j));
        if (merged.flag(gi, gj) != CutFlag::DegenerateDenominator) CHECK(merged.at(gi, gj) == full.at(i, j));
      }
    }
  }
}
