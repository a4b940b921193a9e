#include "homogamy/gnm.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "gnm_detail.hpp"
#include "homogamy/rounding.hpp"

namespace homogamy {

namespace detail {

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > UINT64_MAX / a) return UINT64_MAX;
  return a * b;
}

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) { return b > UINT64_MAX - a ? UINT64_MAX : a + b; }

namespace {

std::int64_t integral_count(double v, const std::string& what) {
  const double r = std::nearbyint(v);
  if (!std::isfinite(v) || std::abs(v - r) > 1e-9 * std::max(1.0, std::abs(v))) {
    throw ValidationError(what + " is " + std::to_string(v) +
                          "; race-by-education availability must be integral (ingest with --round)");
  }
  return static_cast<std::int64_t>(r);
}

}  // namespace

Availability availability_counts(const GnmProblem& p) {
  const RaceEduLayout& L = p.layout;
  const Marginals mg = marginals(p.availability);
  Availability av;
  for (std::size_t race = 0; race < 2; ++race) {
    for (std::size_t k = 0; k < L.n_male_edu(); ++k) {
      av.male[race].push_back(integral_count(mg.rows(static_cast<Eigen::Index>(L.row_index(race, k))),
                                             "husband count " + L.row_labels()[L.row_index(race, k)]));
    }
    for (std::size_t l = 0; l < L.n_female_edu(); ++l) {
      av.female[race].push_back(integral_count(mg.cols(static_cast<Eigen::Index>(L.col_index(race, l))),
                                               "wife count " + L.col_labels()[L.col_index(race, l)]));
    }
  }
  return av;
}

Matrix rounded_step1(const GnmProblem& p, SortOrder order) {
  const ContingencyTable step = order == SortOrder::RaceFirst ? racial_step(p) : education_step(p);
  if (!p.keep_negative && (step.counts().array() < -p.epsilon).any()) {
    throw NoFeasiblePoint(std::string(to_string(order)) + " step one has a negative block total");
  }
  return round_preserving_margins(step.counts());
}

BlockEngine::BlockEngine(const ContingencyTable& source, Matrix weights, double epsilon, bool keep_negative,
                         std::string name)
    : kernel_(source),
      weights_(std::move(weights)),
      epsilon_(epsilon),
      keep_negative_(keep_negative),
      uniform_((weights_.array() == weights_(0, 0)).all()),
      name_(std::move(name)) {}

BlockEngine::Scratch BlockEngine::make_scratch() const {
  Scratch s;
  s.male.assign(rows(), 0.0);
  s.female.assign(cols(), 0.0);
  s.corner.assign((rows() + 1) * (cols() + 1), 0.0);
  s.cells.assign(rows() * cols(), 0.0);
  return s;
}

void BlockEngine::cells(Scratch& s) const {
  const NmKernel::Outcome o = kernel_.apply(s.male, s.female, s.corner, s.cells, true);
  if (o.status == NmKernel::Status::DegenerateSource) {
    throw DegenerateSourceCut(name_ + ": education-preference source has a degenerate Liu-Lu denominator at cut (" +
                                  std::to_string(o.cut_row) + "," + std::to_string(o.cut_col) + ")",
                              o.cut_row, o.cut_col);
  }
}

double BlockEngine::value(Scratch& s) const {
  cells(s);
  const std::size_t m = cols();
  double v = 0.0;
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      const double x = s.cells[r * m + c];
      if (!keep_negative_ && x < -epsilon_) return kNaN;
      v += weights_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * x;
    }
  }
  return v;
}

Matrix race_block_weights(const GnmProblem& p, std::size_t husband_race, std::size_t wife_race) {
  const RaceEduLayout& L = p.layout;
  Matrix w(L.n_male_edu(), L.n_female_edu());
  for (std::size_t k = 0; k < L.n_male_edu(); ++k) {
    for (std::size_t l = 0; l < L.n_female_edu(); ++l) {
      const bool counts = p.objective == Objective::Sehc ? L.homogamous(k, l) : husband_race != wife_race;
      w(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = counts ? 1.0 : 0.0;
    }
  }
  return w;
}

Matrix edu_block_weights(const GnmProblem& p, std::size_t male_edu, std::size_t female_edu) {
  Matrix w(2, 2);
  if (p.objective == Objective::Sehc) {
    w.setConstant(p.layout.homogamous(male_edu, female_edu) ? 1.0 : 0.0);
  } else {
    w << 0.0, 1.0, 1.0, 0.0;
  }
  return w;
}

ContingencyTable race_slice(const ContingencyTable& t, const RaceEduLayout& layout, std::size_t k, std::size_t l) {
  Matrix z(2, 2);
  for (std::size_t hr = 0; hr < 2; ++hr)
    for (std::size_t wr = 0; wr < 2; ++wr)
      z(static_cast<Eigen::Index>(hr), static_cast<Eigen::Index>(wr)) = t(layout.row_index(hr, k), layout.col_index(wr, l));
  return ContingencyTable(std::move(z), {layout.races[0], layout.races[1]}, {layout.races[0], layout.races[1]});
}

}  // namespace detail

std::string_view to_string(SortOrder order) {
  switch (order) {
    case SortOrder::RaceFirst: return "race-first";
    case SortOrder::EducationFirst: return "edu-first";
    case SortOrder::BothOrders: return "both";
  }
  return "unknown";
}

std::string_view to_string(Objective objective) { return objective == Objective::Sehc ? "sehc" : "sirm"; }

std::string_view to_string(SearchMode mode) { return mode == SearchMode::FullLattice ? "full-lattice" : "observed-point"; }

std::string_view to_string(EducationSource source) {
  return source == EducationSource::EducationTime ? "education-time" : "race-time";
}

double evaluate_objective(Objective objective, const ContingencyTable& t, const RaceEduLayout& layout) {
  return objective == Objective::Sehc ? sehc(t, layout) : sirm(t, layout);
}

void GnmProblem::validate() const {
  layout.validate();
  layout.require_conforms(race_pref);
  layout.require_conforms(availability);
  layout.require_conforms(edu_pref);
  if (!race_pref.is_nonnegative() || !availability.is_nonnegative() || !edu_pref.is_nonnegative()) {
    throw ValidationError("observed tables must not contain negative counts");
  }
  if (!(availability.total() > 0.0)) throw ZeroTotal("availability table has no couples");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ValidationError("epsilon must be a finite value >= 0");
  if (jobs == 0) throw ValidationError("jobs must be at least 1");
  (void)detail::availability_counts(*this);
}

ContingencyTable racial_step(const GnmProblem& p) {
  p.validate();
  NmOptions opts;
  opts.allow_forced_cuts = true;
  opts.negative_tolerance = p.epsilon;
  const ContingencyTable source = race_aggregate(p.race_pref, p.layout);
  const ContingencyTable avail = race_aggregate(p.availability, p.layout);
  return nm_transform(source, TargetMarginals::of(avail), opts).table;
}

ContingencyTable education_step(const GnmProblem& p) {
  p.validate();
  NmOptions opts;
  opts.allow_forced_cuts = true;
  opts.negative_tolerance = p.epsilon;
  const ContingencyTable source = edu_aggregate(p.edu_pref, p.layout);
  const ContingencyTable avail = edu_aggregate(p.availability, p.layout);
  return nm_transform(source, TargetMarginals::of(avail), opts).table;
}

namespace {

void require_member(bool ok) {
  if (!ok) throw ValidationError("allocation is not a point of the feasible lattice");
}

Assembly assemble_race_first(const GnmProblem& p, const ContingencyTable& racial, const AllocationPoint& a) {
  const RaceEduLayout& L = p.layout;
  const RaceFirstLattice lat = race_first_lattice(p, racial);
  const std::size_t n = L.n_male_edu();
  const std::size_t m = L.n_female_edu();
  require_member(a.coords.size() == 2 * n + 2 * m);
  const std::array<std::span<const std::int64_t>, 4> parts{
      std::span<const std::int64_t>(a.coords.data(), n), std::span<const std::int64_t>(a.coords.data() + n, n),
      std::span<const std::int64_t>(a.coords.data() + 2 * n, m),
      std::span<const std::int64_t>(a.coords.data() + 2 * n + m, m)};
  for (std::size_t i = 0; i < 4; ++i) require_member(lat.parts[i].index_of(parts[i]).has_value());

  const ContingencyTable& edu_src = p.edu_source == EducationSource::EducationTime ? p.edu_pref : p.race_pref;
  Matrix out = Matrix::Zero(L.rows(), L.cols());
  for (std::size_t hr = 0; hr < 2; ++hr) {
    for (std::size_t wr = 0; wr < 2; ++wr) {
      const detail::BlockEngine block(block_extract(edu_src, L, hr, wr), detail::race_block_weights(p, hr, wr),
                                      p.epsilon, true, "block " + L.races[hr] + "-" + L.races[wr]);
      auto s = block.make_scratch();
      // Inter-racial blocks take the allocation; same-race blocks the complement.
      const auto& male_alloc = hr == 0 ? parts[0] : parts[1];
      const auto& female_alloc = wr == 0 ? parts[2] : parts[3];
      for (std::size_t k = 0; k < n; ++k) {
        const auto v = static_cast<double>(male_alloc[k]);
        s.male[k] = hr != wr ? v : static_cast<double>(lat.male_avail[hr][k]) - v;
      }
      for (std::size_t l = 0; l < m; ++l) {
        const auto v = static_cast<double>(female_alloc[l]);
        s.female[l] = hr != wr ? v : static_cast<double>(lat.female_avail[wr][l]) - v;
      }
      block.cells(s);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < m; ++l)
          out(static_cast<Eigen::Index>(L.row_index(hr, k)), static_cast<Eigen::Index>(L.col_index(wr, l))) =
              s.cells[k * m + l];
    }
  }
  return {L.make_table(std::move(out)), {}};
}

Assembly assemble_edu_first(const GnmProblem& p, const ContingencyTable& edu, const AllocationPoint& a) {
  const RaceEduLayout& L = p.layout;
  const EduFirstLattice lat = edu_first_lattice(p, edu);
  const std::size_t n = L.n_male_edu();
  const std::size_t m = L.n_female_edu();
  require_member(a.coords.size() == 2 * n * m);
  auto x = [&](std::size_t k, std::size_t l) { return a.coords[l * 2 * n + k]; };
  auto y = [&](std::size_t k, std::size_t l) { return a.coords[l * 2 * n + n + k]; };
  for (std::size_t k = 0; k < n; ++k) {
    std::int64_t row = 0;
    for (std::size_t l = 0; l < m; ++l) {
      const auto ki = static_cast<Eigen::Index>(k);
      const auto li = static_cast<Eigen::Index>(l);
      require_member(x(k, l) >= 0 && x(k, l) <= lat.male_cap(ki, li));
      require_member(y(k, l) >= 0 && y(k, l) <= lat.female_cap(ki, li));
      row += x(k, l);
    }
    require_member(row == lat.male_avail[0][k]);
  }
  for (std::size_t l = 0; l < m; ++l) {
    std::int64_t col = 0;
    for (std::size_t k = 0; k < n; ++k) col += y(k, l);
    require_member(col == lat.female_avail[0][l]);
  }

  Matrix out = Matrix::Zero(L.rows(), L.cols());
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < m; ++l) {
      const detail::BlockEngine block(detail::race_slice(p.race_pref, L, k, l), detail::edu_block_weights(p, k, l),
                                      p.epsilon, true, "block " + L.male_edu[k] + "-" + L.female_edu[l]);
      auto s = block.make_scratch();
      const double e = lat.edu(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
      s.male = {static_cast<double>(x(k, l)), e - static_cast<double>(x(k, l))};
      s.female = {static_cast<double>(y(k, l)), e - static_cast<double>(y(k, l))};
      block.cells(s);
      for (std::size_t hr = 0; hr < 2; ++hr)
        for (std::size_t wr = 0; wr < 2; ++wr)
          out(static_cast<Eigen::Index>(L.row_index(hr, k)), static_cast<Eigen::Index>(L.col_index(wr, l))) =
              s.cells[hr * 2 + wr];
    }
  }
  return {L.make_table(std::move(out)), {}};
}

}  // namespace

Assembly assemble_counterfactual(const GnmProblem& p, const ContingencyTable& step1, const AllocationPoint& a) {
  Assembly out = a.order == SortOrder::EducationFirst ? assemble_edu_first(p, step1, a) : assemble_race_first(p, step1, a);
  for (std::size_t r = 0; r < out.table.rows(); ++r)
    for (std::size_t c = 0; c < out.table.cols(); ++c)
      if (out.table(r, c) < -p.epsilon) out.negative_cells.push_back({r, c, out.table(r, c)});
  return out;
}

AllocationPoint observed_allocation(const GnmProblem& p, SortOrder order) {
  const RaceEduLayout& L = p.layout;
  const ContingencyTable& t = p.availability;
  const std::size_t n = L.n_male_edu();
  const std::size_t m = L.n_female_edu();
  auto count = [](double v) {
    const double r = std::nearbyint(v);
    if (std::abs(v - r) > 1e-9 * std::max(1.0, std::abs(v))) {
      throw ValidationError("observed allocation is not integral");
    }
    return static_cast<std::int64_t>(r);
  };
  AllocationPoint a{order, {}};
  if (order == SortOrder::RaceFirst) {
    for (std::size_t hr : {0u, 1u}) {
      for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t l = 0; l < m; ++l) s += t(L.row_index(hr, k), L.col_index(1 - hr, l));
        a.coords.push_back(count(s));
      }
    }
    for (std::size_t wr : {0u, 1u}) {
      for (std::size_t l = 0; l < m; ++l) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += t(L.row_index(1 - wr, k), L.col_index(wr, l));
        a.coords.push_back(count(s));
      }
    }
    return a;
  }
  if (order != SortOrder::EducationFirst) throw ValidationError("observed allocation needs a single order");
  for (std::size_t l = 0; l < m; ++l) {
    for (std::size_t k = 0; k < n; ++k)
      a.coords.push_back(count(t(L.row_index(0, k), L.col_index(0, l)) + t(L.row_index(0, k), L.col_index(1, l))));
    for (std::size_t k = 0; k < n; ++k)
      a.coords.push_back(count(t(L.row_index(0, k), L.col_index(0, l)) + t(L.row_index(1, k), L.col_index(0, l))));
  }
  return a;
}

namespace {

ContingencyTable step1_table(const GnmProblem& p, const Matrix& rounded, SortOrder order) {
  if (order == SortOrder::RaceFirst) return ContingencyTable(rounded, {p.layout.races[0], p.layout.races[1]},
                                                             {p.layout.races[0], p.layout.races[1]});
  return ContingencyTable(rounded, p.layout.male_edu, p.layout.female_edu);
}

std::optional<double> observed_value(const GnmProblem& p, const ContingencyTable& step1, SortOrder order) {
  try {
    const AllocationPoint a = observed_allocation(p, order);
    const Assembly asmb = assemble_counterfactual(p, step1, a);
    if (!p.keep_negative && !asmb.negative_cells.empty()) return std::nullopt;
    return evaluate_objective(p.objective, asmb.table, p.layout);
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

double canonical_value(const GnmProblem& p, const ContingencyTable& step1, const AllocationPoint& a) {
  return evaluate_objective(p.objective, assemble_counterfactual(p, step1, a).table, p.layout);
}

MomentInterval single_order(const GnmProblem& p, SortOrder order) {
  MomentInterval out;
  out.order = order;
  out.step1 = detail::rounded_step1(p, order);
  // Passing the rounded table through rounding again is the identity.
  const ContingencyTable step1 = step1_table(p, out.step1, order);

  detail::SearchResult found;
  if (order == SortOrder::RaceFirst) {
    const RaceFirstLattice lat = race_first_lattice(p, step1);
    out.n_lattice = lat.size();
    if (p.mode == SearchMode::FullLattice) found = detail::search_race_first(p, lat);
  } else {
    const EduFirstLattice lat = edu_first_lattice(p, step1);
    out.n_lattice = lat.size();
    if (p.mode == SearchMode::FullLattice) found = detail::search_edu_first(p, lat);
  }
  out.observed_value = observed_value(p, step1, order);

  if (p.mode == SearchMode::ObservedPoint) {
    if (!out.observed_value) {
      throw NoFeasiblePoint("observed allocation is outside the " + std::string(to_string(order)) +
                            " lattice or produces a negative cell");
    }
    out.min_value = out.max_value = *out.observed_value;
    out.argmin = out.argmax = observed_allocation(p, order);
    out.n_feasible = 1;
    return out;
  }

  if (found.n_feasible == 0) {
    throw NoFeasiblePoint("every " + std::string(to_string(order)) + " allocation (" + std::to_string(out.n_lattice) +
                          ") produces a cell below -epsilon");
  }
  out.argmin = std::move(found.argmin);
  out.argmax = std::move(found.argmax);
  out.min_value = canonical_value(p, step1, out.argmin);
  out.max_value = canonical_value(p, step1, out.argmax);
  // Tied allocations can differ in the last bit; the observed one is feasible too.
  if (out.observed_value && *out.observed_value < out.min_value) {
    out.min_value = *out.observed_value;
    out.argmin = observed_allocation(p, order);
  }
  if (out.observed_value && *out.observed_value > out.max_value) {
    out.max_value = *out.observed_value;
    out.argmax = observed_allocation(p, order);
  }
  out.n_feasible = found.n_feasible;
  out.n_excluded_negative = p.keep_negative ? 0 : out.n_lattice - found.n_feasible;
  spdlog::debug("{} {}: [{}, {}] over {} feasible of {} points", to_string(order), to_string(p.objective),
                out.min_value, out.max_value, out.n_feasible, out.n_lattice);
  return out;
}

}  // namespace

MomentInterval gnm_interval(const GnmProblem& p) {
  p.validate();
  if (p.order != SortOrder::BothOrders) return single_order(p, p.order);

  MomentInterval race = single_order(p, SortOrder::RaceFirst);
  MomentInterval edu = single_order(p, SortOrder::EducationFirst);
  MomentInterval out;
  out.order = SortOrder::BothOrders;
  const bool edu_min = edu.min_value < race.min_value;
  const bool edu_max = edu.max_value > race.max_value;
  out.min_value = edu_min ? edu.min_value : race.min_value;
  out.argmin = edu_min ? edu.argmin : race.argmin;
  out.max_value = edu_max ? edu.max_value : race.max_value;
  out.argmax = edu_max ? edu.argmax : race.argmax;
  out.n_lattice = detail::saturating_add(race.n_lattice, edu.n_lattice);
  out.n_feasible = detail::saturating_add(race.n_feasible, edu.n_feasible);
  out.n_excluded_negative = detail::saturating_add(race.n_excluded_negative, edu.n_excluded_negative);
  out.observed_value = race.observed_value ? race.observed_value : edu.observed_value;
  out.step1 = race.step1;
  out.per_order.push_back(std::move(race));
  out.per_order.push_back(std::move(edu));
  return out;
}

}  // namespace homogamy
