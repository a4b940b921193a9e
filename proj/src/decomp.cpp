#include "homogamy/decomp.hpp"

#include <spdlog/spdlog.h>

#include "homogamy/nm.hpp"

namespace homogamy {

namespace {

// Extremes of sum_i coef_i * x_i with each x_i free in its interval.
Interval combine(const std::vector<std::pair<double, Interval>>& terms) {
  Interval out{0.0, 0.0};
  for (const auto& [coef, x] : terms) {
    if (coef >= 0.0) {
      out.lo += coef * x.lo;
      out.hi += coef * x.hi;
    } else {
      out.lo += coef * x.hi;
      out.hi += coef * x.lo;
    }
  }
  return out;
}

std::string corner_name(int a, int pr, int pe) {
  return "(A=" + std::to_string(a) + ", PR=" + std::to_string(pr) + ", PE=" + std::to_string(pe) + ")";
}

}  // namespace

FactorGrid3 FactorGrid3::of_points(const std::array<double, 8>& values) {
  FactorGrid3 g;
  for (std::size_t i = 0; i < 8; ++i) g.f[i] = Interval::point(values[i]);
  return g;
}

const Component& DecompositionReport::component(const std::string& name) const {
  for (const Component& c : components)
    if (c.name == name) return c;
  throw ValidationError("no component named " + name);
}

DecompositionReport biewen2(const FactorGrid2& g) {
  DecompositionReport r;
  r.total_change = Interval::point(g.f11 - g.f00);
  r.components = {
      {"availability", Component::Kind::Main, Interval::point(g.f10 - g.f00)},
      {"preferences", Component::Kind::Main, Interval::point(g.f01 - g.f00)},
      {"availability_x_preferences", Component::Kind::Interaction, Interval::point(g.f11 - g.f10 - g.f01 + g.f00)},
  };
  double sum = 0.0;
  for (const Component& c : r.components) sum += c.value.lo;
  r.exact_sum_check = r.total_change.lo - sum;
  return r;
}

DecompositionReport biewen3(const FactorGrid3& g) {
  DecompositionReport r;
  const Interval& f000 = g.at(0, 0, 0);
  const Interval& f111 = g.at(1, 1, 1);
  r.conservative = std::any_of(g.f.begin(), g.f.end(), [](const Interval& x) { return !x.is_point(); });
  r.total_change = combine({{1.0, f111}, {-1.0, f000}});

  auto main = [&](const Interval& corner) { return combine({{1.0, corner}, {-1.0, f000}}); };
  // f_ab - f_a - f_b + f000 after merging the three f000 terms of each pairwise bracket.
  auto pair = [&](const Interval& both, const Interval& one, const Interval& other) {
    return combine({{1.0, both}, {-1.0, one}, {-1.0, other}, {1.0, f000}});
  };
  r.components = {
      {"availability", Component::Kind::Main, main(g.at(1, 0, 0))},
      {"race_preferences", Component::Kind::Main, main(g.at(0, 1, 0))},
      {"education_preferences", Component::Kind::Main, main(g.at(0, 0, 1))},
      {"race_preferences_x_availability", Component::Kind::Interaction,
       pair(g.at(1, 1, 0), g.at(1, 0, 0), g.at(0, 1, 0))},
      {"education_preferences_x_availability", Component::Kind::Interaction,
       pair(g.at(1, 0, 1), g.at(1, 0, 0), g.at(0, 0, 1))},
      {"education_preferences_x_race_preferences", Component::Kind::Interaction,
       pair(g.at(0, 1, 1), g.at(0, 1, 0), g.at(0, 0, 1))},
  };

  Interval others{0.0, 0.0};
  for (const Component& c : r.components) {
    others.lo += c.value.lo;
    others.hi += c.value.hi;
  }
  Interval residuum;
  if (r.total_change.is_point() && others.is_point()) {
    residuum = Interval::point(r.total_change.lo - others.lo);
  } else {
    residuum = {r.total_change.lo - others.hi, r.total_change.hi - others.lo};
  }
  r.components.push_back({"residuum", Component::Kind::Residuum, residuum});

  double sum = 0.0;
  for (const Component& c : r.components) sum += c.value.mid();
  r.exact_sum_check = r.total_change.mid() - sum;
  for (int a = 0; a < 2; ++a)
    for (int pr = 0; pr < 2; ++pr)
      for (int pe = 0; pe < 2; ++pe) r.corners.push_back({a, pr, pe, g.at(a, pr, pe), 0});
  return r;
}

DecompositionReport decompose_one_dim(const ContingencyTable& z0, const ContingencyTable& z1, const Moment& moment) {
  if (z0.rows() != z1.rows() || z0.cols() != z1.cols()) throw DimensionMismatch("tables differ in shape");
  const NmResult a1p0 = nm_transform(z0, z1);
  const NmResult a0p1 = nm_transform(z1, z0);
  FactorGrid2 g;
  g.f00 = moment(z0);
  g.f11 = moment(z1);
  g.f10 = moment(a1p0.table);
  g.f01 = moment(a0p1.table);
  DecompositionReport r = biewen2(g);
  r.corners = {{0, 0, 0, Interval::point(g.f00), 0},
               {0, 1, 1, Interval::point(g.f01), 0},
               {1, 0, 0, Interval::point(g.f10), 0},
               {1, 1, 1, Interval::point(g.f11), 0}};
  if (a1p0.has_negative()) r.diagnostics.push_back("counterfactual with later availability has negative cells");
  if (a0p1.has_negative()) r.diagnostics.push_back("counterfactual with later preferences has negative cells");
  if (a1p0.any_negative_assortativity() || a0p1.any_negative_assortativity()) {
    r.diagnostics.push_back("a preference source has negative sorting at some cut");
  }
  return r;
}

DecompositionReport decompose_two_dim(const ContingencyTable& k0, const ContingencyTable& k1,
                                      const RaceEduLayout& layout, const TwoDimOptions& options) {
  layout.require_conforms(k0);
  layout.require_conforms(k1);
  const std::array<const ContingencyTable*, 2> at{&k0, &k1};
  FactorGrid3 g;
  std::array<std::uint64_t, 8> feasible{};
  std::vector<std::string> diagnostics;
  for (int a = 0; a < 2; ++a) {
    for (int pr = 0; pr < 2; ++pr) {
      for (int pe = 0; pe < 2; ++pe) {
        const ContingencyTable& ka = *at[static_cast<std::size_t>(a)];
        const ContingencyTable& kr = *at[static_cast<std::size_t>(pr)];
        const ContingencyTable& ke = *at[static_cast<std::size_t>(pe)];
        if (ka.same_counts(kr) && ka.same_counts(ke)) {
          // All three roles observed in one table: the corner is that table.
          g.at(a, pr, pe) = Interval::point(evaluate_objective(options.objective, ka, layout));
          continue;
        }
        GnmProblem p{kr, ka, ke, layout};
        p.order = options.order;
        p.objective = options.objective;
        p.epsilon = options.epsilon;
        p.keep_negative = options.keep_negative;
        p.edu_source = options.edu_source;
        p.jobs = options.jobs;
        const std::string name = corner_name(a, pr, pe);
        spdlog::info("corner {}: searching {} lattice", name, to_string(options.order));
        try {
          const MomentInterval mi = gnm_interval(p);
          g.at(a, pr, pe) = {mi.min_value, mi.max_value};
          feasible[FactorGrid3::index(a, pr, pe)] = mi.n_feasible;
          if (mi.n_excluded_negative > 0) {
            diagnostics.push_back("corner " + name + ": " + std::to_string(mi.n_excluded_negative) +
                                  " allocations excluded for negative cells");
          }
        } catch (const NoFeasiblePoint& e) {
          throw NoFeasiblePoint("corner " + name + ": " + e.what());
        } catch (const Error& e) {
          spdlog::error("corner {} failed: {}", name, e.what());
          throw;
        }
      }
    }
  }
  DecompositionReport r = biewen3(g);
  for (Corner& c : r.corners) c.n_feasible = feasible[FactorGrid3::index(c.a, c.pr, c.pe)];
  r.diagnostics = std::move(diagnostics);
  return r;
}

}  // namespace homogamy
