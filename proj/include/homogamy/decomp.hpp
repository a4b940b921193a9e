#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "homogamy/gnm.hpp"
#include "homogamy/tables.hpp"

namespace homogamy {

/// Closed real interval; a point value has lo == hi.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  static Interval point(double v) { return {v, v}; }
  bool is_point() const { return lo == hi; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
  bool operator==(const Interval&) const = default;
};

/// Moment values at the four (availability, preference) time combinations;
/// fap holds availability from time a and preferences from time p.
struct FactorGrid2 {
  double f00 = 0.0;
  double f01 = 0.0;
  double f10 = 0.0;
  double f11 = 0.0;
};

/// Moment values (possibly intervals) at all (A, PR, PE) time combinations.
struct FactorGrid3 {
  std::array<Interval, 8> f{};

  static std::size_t index(int a, int pr, int pe) { return static_cast<std::size_t>(a * 4 + pr * 2 + pe); }
  Interval& at(int a, int pr, int pe) { return f[index(a, pr, pe)]; }
  const Interval& at(int a, int pr, int pe) const { return f[index(a, pr, pe)]; }
  static FactorGrid3 of_points(const std::array<double, 8>& values);
};

struct Component {
  enum class Kind { Main, Interaction, Residuum };
  std::string name;
  Kind kind = Kind::Main;
  Interval value;
};

struct Corner {
  int a = 0;
  int pr = 0;
  int pe = 0;
  Interval value;
  std::uint64_t n_feasible = 0;  ///< 0 for observed corners
};

struct DecompositionReport {
  Interval total_change;
  std::vector<Component> components;
  /// total - sum of components, at interval midpoints when corners are intervals.
  double exact_sum_check = 0.0;
  /// True when interval corners were combined by independent endpoint selection.
  bool conservative = false;
  std::vector<Corner> corners;
  std::vector<std::string> diagnostics;

  const Component& component(const std::string& name) const;
};

/// Two-factor path-independent scheme: availability, preferences, and their
/// joint effect.
DecompositionReport biewen2(const FactorGrid2& g);

/// Three-factor scheme: three main effects, three pairwise interaction terms
/// and the residuum. Interval corners are combined conservatively: every term
/// takes its extremes over independent choices of each corner inside its
/// interval; the residuum is the total minus the interval sum of the others.
DecompositionReport biewen3(const FactorGrid3& g);

using Moment = std::function<double(const ContingencyTable&)>;

/// Availability-versus-preferences decomposition of moment(Z1) - moment(Z0),
/// with the mixed corners built by the NM transform.
DecompositionReport decompose_one_dim(const ContingencyTable& z0, const ContingencyTable& z1, const Moment& moment);

struct TwoDimOptions {
  Objective objective = Objective::Sehc;
  SortOrder order = SortOrder::RaceFirst;
  double epsilon = 1e-9;
  bool keep_negative = false;
  EducationSource edu_source = EducationSource::EducationTime;
  unsigned jobs = 1;
};

/// Availability / race preferences / education preferences decomposition of
/// objective(K1) - objective(K0). Each mixed corner is the counterfactual
/// interval for (availability, race preferences, education preferences)
/// observed at the corner's times.
DecompositionReport decompose_two_dim(const ContingencyTable& k0, const ContingencyTable& k1,
                                      const RaceEduLayout& layout, const TwoDimOptions& options = {});

}  // namespace homogamy
