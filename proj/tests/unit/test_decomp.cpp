#include <doctest.h>

#include <cmath>

#include "homogamy/decomp.hpp"
#include "homogamy/nm.hpp"
#include "homogamy/oracle.hpp"
#include "support.hpp"

using namespace homogamy;
using homogamy::testing::Rng;

namespace {

double component_sum(const DecompositionReport& r) {
  double s = 0.0;
  for (const Component& c : r.components) s += c.value.lo;
  return s;
}

double diagonal_share(const ContingencyTable& t) { return t.counts().trace() / t.total(); }

}  // namespace

TEST_CASE("two-factor scheme") {
  // f(A, P) = A * P with A: 1 -> 2 and P: 3 -> 5.
  const DecompositionReport r = biewen2({3.0, 5.0, 6.0, 10.0});
  CHECK(r.total_change.lo == 7.0);
  CHECK(r.component("availability").value.lo == 3.0);
  CHECK(r.component("preferences").value.lo == 2.0);
  CHECK(r.component("availability_x_preferences").value.lo == 2.0);
  CHECK(r.exact_sum_check == 0.0);
}

TEST_CASE("three-factor multiplicative fixture") {
  // f(A, PR, PE) = A * PR * PE from (1, 1, 1) to (2, 3, 4).
  std::array<double, 8> v{};
  for (int a = 0; a < 2; ++a)
    for (int pr = 0; pr < 2; ++pr)
      for (int pe = 0; pe < 2; ++pe) v[FactorGrid3::index(a, pr, pe)] = (a ? 2 : 1) * (pr ? 3 : 1) * (pe ? 4 : 1);
  const DecompositionReport r = biewen3(FactorGrid3::of_points(v));
  CHECK(r.total_change.lo == 23.0);
  CHECK(r.component("availability").value.lo == 1.0);
  CHECK(r.component("race_preferences").value.lo == 2.0);
  CHECK(r.component("education_preferences").value.lo == 3.0);
  CHECK(r.component("race_preferences_x_availability").value.lo == 2.0);
  CHECK(r.component("education_preferences_x_availability").value.lo == 3.0);
  CHECK(r.component("education_preferences_x_race_preferences").value.lo == 6.0);
  CHECK(r.component("residuum").value.lo == 6.0);
  CHECK_FALSE(r.conservative);
  CHECK_THROWS_AS(r.component("nope"), ValidationError);
}

TEST_CASE("components sum to the total on random point grids") {
  Rng rng(51);
  for (int trial = 0; trial < 2000; ++trial) {
    const FactorGrid2 g2{testing::uniform_real(rng, -5, 5), testing::uniform_real(rng, -5, 5),
                         testing::uniform_real(rng, -5, 5), testing::uniform_real(rng, -5, 5)};
    const DecompositionReport r2 = biewen2(g2);
    CHECK(std::abs(r2.total_change.lo - component_sum(r2)) <= 1e-12);
    std::array<double, 8> v{};
    for (double& x : v) x = testing::uniform_real(rng, 0, 1);
    const DecompositionReport r3 = biewen3(FactorGrid3::of_points(v));
    CHECK(std::abs(r3.total_change.lo - component_sum(r3)) <= 1e-12);
    CHECK(std::abs(r3.exact_sum_check) <= 1e-12);
  }
}

TEST_CASE("interval corners give intervals containing every point selection") {
  Rng rng(52);
  for (int trial = 0; trial < 300; ++trial) {
    FactorGrid3 g;
    for (Interval& i : g.f) {
      const double a = testing::uniform_real(rng, 0, 1);
      i = {a, a + testing::uniform_real(rng, 0, 0.2)};
    }
    const DecompositionReport r = biewen3(g);
    CHECK(r.conservative);
    for (int draw = 0; draw < 20; ++draw) {
      std::array<double, 8> v{};
      for (std::size_t k = 0; k < 8; ++k) v[k] = testing::uniform_real(rng, g.f[k].lo, g.f[k].hi);
      const DecompositionReport p = biewen3(FactorGrid3::of_points(v));
      for (std::size_t c = 0; c < p.components.size(); ++c) {
        CHECK(r.components[c].value.lo <= p.components[c].value.lo + 1e-12);
        CHECK(p.components[c].value.hi <= r.components[c].value.hi + 1e-12);
      }
    }
  }
}

TEST_CASE("one-dimensional decomposition separates availability from preferences") {
  const ContingencyTable z0 = ContingencyTable::from_rows({{30, 10}, {10, 50}});
  SUBCASE("same preferences, new marginals") {
    const ContingencyTable z1 = nm_transform(z0, TargetMarginals{Vector::Constant(2, 50), Vector::Constant(2, 50)}).table;
    const DecompositionReport r = decompose_one_dim(z0, z1, diagonal_share);
    CHECK(std::abs(r.component("preferences").value.lo) <= 1e-12);
    CHECK(std::abs(r.component("availability_x_preferences").value.lo) <= 1e-12);
    CHECK(std::abs(r.component("availability").value.lo - (diagonal_share(z1) - diagonal_share(z0))) <= 1e-12);
  }
  SUBCASE("same marginals, new preferences") {
    const ContingencyTable z1 = ContingencyTable::from_rows({{35, 5}, {5, 55}});
    const DecompositionReport r = decompose_one_dim(z0, z1, diagonal_share);
    CHECK(std::abs(r.component("availability").value.lo) <= 1e-12);
    CHECK(std::abs(r.component("availability_x_preferences").value.lo) <= 1e-12);
    CHECK(std::abs(r.component("preferences").value.lo - (diagonal_share(z1) - diagonal_share(z0))) <= 1e-12);
  }
}

TEST_CASE("two-dimensional decomposition matches corner-wise enumeration") {
  Rng rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    const GnmProblem base = testing::small_gnm_instance(rng);
    const ContingencyTable& k0 = base.race_pref;
    const ContingencyTable& k1 = base.edu_pref;
    for (Objective obj : {Objective::Sehc, Objective::Sirm}) {
      TwoDimOptions o;
      o.objective = obj;
      o.order = SortOrder::BothOrders;
      DecompositionReport r;
      try {
        r = decompose_two_dim(k0, k1, base.layout, o);
      } catch (const NoFeasiblePoint&) {
        continue;
      }
      FactorGrid3 g;
      const std::array<const ContingencyTable*, 2> at{&k0, &k1};
      for (int a = 0; a < 2; ++a)
        for (int pr = 0; pr < 2; ++pr)
          for (int pe = 0; pe < 2; ++pe) {
            const ContingencyTable& ka = *at[a];
            if (ka.same_counts(*at[pr]) && ka.same_counts(*at[pe])) {
              g.at(a, pr, pe) = Interval::point(evaluate_objective(obj, ka, base.layout));
              continue;
            }
            GnmProblem p{*at[pr], ka, *at[pe], base.layout};
            p.objective = obj;
            p.order = SortOrder::BothOrders;
            const MomentInterval mi = oracle::enumerate_gnm(p);
            g.at(a, pr, pe) = {mi.min_value, mi.max_value};
          }
      const DecompositionReport want = biewen3(g);
      REQUIRE(r.components.size() == want.components.size());
      for (std::size_t c = 0; c < r.components.size(); ++c) {
        CHECK(std::abs(r.components[c].value.lo - want.components[c].value.lo) <= 1e-12);
        CHECK(std::abs(r.components[c].value.hi - want.components[c].value.hi) <= 1e-12);
      }
    }
  }
}

TEST_CASE("identical tables decompose to zero change") {
  Rng rng(54);
  const GnmProblem p = testing::small_gnm_instance(rng);
  const DecompositionReport r = decompose_two_dim(p.race_pref, p.race_pref, p.layout);
  CHECK(r.total_change == Interval::point(0.0));
  for (const Component& c : r.components) CHECK(c.value == Interval::point(0.0));
}
