#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "homogamy/commands.hpp"
#include "homogamy/decomp.hpp"
#include "homogamy/liulu.hpp"
#include "homogamy/nm.hpp"
#include "homogamy/oracle.hpp"
#include "support.hpp"

using namespace homogamy;
using homogamy::testing::Rng;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Vector positive_composition(Rng& rng, std::size_t len, std::int64_t total) {
  return Vector::Ones(static_cast<Eigen::Index>(len)) +
         testing::random_composition(rng, len, total - static_cast<std::int64_t>(len));
}

TwoByTwo two_by_two(const Matrix& m) {
  TwoByTwo z;
  z.ll = m(0, 0);
  z.lh = m(0, 1);
  z.hl = m(1, 0);
  z.hh = m(1, 1);
  return z;
}

Outcome liu_lu_correctness() {
  Rng rng(1001);
  const auto t0 = Clock::now();
  int mismatches = 0;
  int compared = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const TwoByTwo z = two_by_two(testing::random_int_matrix(rng, 2, 2, 0, trial % 2 ? 20 : 5000));
    const std::optional<double> want = oracle::liu_lu(z.ll, z.lh, z.hl, z.hh);
    try {
      const double got = ll_simple(z).value;
      if (!want || got != *want) ++mismatches;
      ++compared;
    } catch (const Error&) {
      if (want) ++mismatches;
    }
  }
  const bool fixtures = ll_simple(two_by_two((Matrix(2, 2) << 16, 24, 24, 36).finished())).value == 0.0 &&
                        ll_simple(two_by_two((Matrix(2, 2) << 40, 0, 0, 60).finished())).value == 1.0 &&
                        ll_simple(two_by_two((Matrix(2, 2) << 25, 25, 25, 25).finished())).value == 0.0 &&
                        ll_simple(two_by_two((Matrix(2, 2) << 7, 0, 0, 3).finished())).value == 1.0;
  const double s = seconds_since(t0);
  return {mismatches == 0 && fixtures && s < 1.0,
          std::to_string(compared) + " defined of 1000, " + std::to_string(mismatches) + " mismatches, fixtures " +
              (fixtures ? "ok" : "wrong") + ", " + fmt_double(s) + " s"};
}

Outcome nm_invariants() {
  Rng rng(1002);
  const auto t0 = Clock::now();
  double fidelity = 0.0;
  double ll = 0.0;
  double identity = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const ContingencyTable src(testing::random_int_matrix(rng, 3, 3, 1, 60));
    const std::int64_t total = testing::uniform_int(rng, 9, 600);
    const Vector rows = positive_composition(rng, 3, total);
    const Vector cols = positive_composition(rng, 3, total);
    const NmResult r = nm_transform(src, TargetMarginals{rows, cols});
    const oracle::NmCheck c = oracle::verify_nm(src, rows, cols, r.table);
    fidelity = std::max({fidelity, c.max_row_deviation, c.max_col_deviation});
    ll = std::max(ll, c.max_ll_deviation);
    const NmResult same = nm_transform(src, TargetMarginals::of(src));
    identity = std::max(identity, (same.table.counts() - src.counts()).cwiseAbs().maxCoeff());
  }
  const double s = seconds_since(t0);
  return {fidelity <= 1e-9 && ll <= 1e-9 && identity <= 1e-12 && s < 5.0,
          "marginal " + fmt_double(fidelity) + ", LL " + fmt_double(ll) + ", identity " + fmt_double(identity) + ", " +
              fmt_double(s) + " s"};
}

Outcome closed_form() {
  const NmResult a =
      nm_transform(ContingencyTable::from_rows({{30, 10}, {10, 50}}), TargetMarginals{vec({50, 50}), vec({50, 50})});
  const Matrix want_a = (Matrix(2, 2) << 39.583333, 10.416667, 10.416667, 39.583333).finished();
  const double da = (a.table.counts() - want_a).cwiseAbs().maxCoeff();
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 10, 10, 10;
  const Vector t = vec({12, 10, 8});
  const NmResult b = nm_transform(ContingencyTable(d), TargetMarginals{t, t});
  Matrix want_b = Matrix::Zero(3, 3);
  want_b.diagonal() = t;
  const double db = (b.table.counts() - want_b).cwiseAbs().maxCoeff();
  return {da <= 1e-6 && db <= 1e-9, "2x2 deviation " + fmt_double(da) + ", diagonal deviation " + fmt_double(db)};
}

Outcome merge_commutation() {
  Rng rng(1004);
  double worst = 0.0;
  int done = 0;
  while (done < 500) {
    const ContingencyTable src(testing::random_int_matrix(rng, 4, 4, 1, 40));
    const std::int64_t total = testing::uniform_int(rng, 16, 500);
    const Vector rows = positive_composition(rng, 4, total);
    const Vector cols = positive_composition(rng, 4, total);
    const Partition rg = testing::random_contiguous_partition(rng, 4);
    const Partition cg = testing::random_contiguous_partition(rng, 4);
    if (rg.size() < 2 || cg.size() < 2) continue;
    const Matrix x = merge_categories(nm_transform(src, TargetMarginals{rows, cols}).table, rg, cg).counts();
    const Matrix y = nm_transform(merge_categories(src, rg, cg),
                                  TargetMarginals{merge_vector(rows, rg), merge_vector(cols, cg)})
                         .table.counts();
    worst = std::max(worst, (x - y).cwiseAbs().maxCoeff());
    ++done;
  }
  return {worst <= 1e-9, "500 merges, max deviation " + fmt_double(worst)};
}

Outcome zero_robustness() {
  Rng rng(1005);
  int done = 0;
  int failures = 0;
  int max_zeros = 0;
  while (done < 100) {
    Matrix m = testing::random_int_matrix(rng, 4, 4, 1, 30);
    const auto zeros = testing::uniform_int(rng, 1, 8);
    std::set<std::int64_t> cells;
    while (static_cast<std::int64_t>(cells.size()) < zeros) cells.insert(testing::uniform_int(rng, 0, 15));
    for (std::int64_t c : cells) m(c / 4, c % 4) = 0.0;
    const ContingencyTable src(m);
    if (ll_generalized(src).any_degenerate()) continue;
    const Vector rows = positive_composition(rng, 4, 120);
    const Vector cols = positive_composition(rng, 4, 120);
    try {
      const NmResult r = nm_transform(src, TargetMarginals{rows, cols});
      const oracle::NmCheck c = oracle::verify_nm(src, rows, cols, r.table);
      if (c.max_row_deviation > 1e-9 || c.max_col_deviation > 1e-9 || c.max_ll_deviation > 1e-9) ++failures;
    } catch (const Error&) {
      ++failures;
    }
    max_zeros = std::max(max_zeros, static_cast<int>(zeros));
    ++done;
  }
  return {failures == 0, "100 sources with up to " + std::to_string(max_zeros) + " of 16 cells zero, " +
                             std::to_string(failures) + " failures"};
}

Outcome negative_signalling() {
  const ContingencyTable src = ContingencyTable::from_rows({{38, 9, 10}, {3, 37, 13}, {1, 10, 38}});
  const Vector rows = vec({11, 9, 10});
  const Vector cols = vec({12, 5, 13});
  const NmResult r = nm_transform(src, TargetMarginals{rows, cols});
  const oracle::NmCheck c = oracle::verify_nm(src, rows, cols, r.table);
  const double theta_min = ll_generalized(src).values.minCoeff();
  const bool ok = !r.negative_cells.empty() && c.max_row_deviation <= 1e-9 && c.max_col_deviation <= 1e-9 &&
                  c.max_ll_deviation <= 1e-9;
  return {ok, std::to_string(r.negative_cells.size()) + " negative cell(s), smallest source cut value " +
                  fmt_double(theta_min) + ", fidelity " + fmt_double(std::max(c.max_row_deviation, c.max_col_deviation)) +
                  ", LL " + fmt_double(c.max_ll_deviation)};
}

double component_sum(const DecompositionReport& r) {
  double s = 0.0;
  for (const Component& c : r.components) s += c.value.lo;
  return s;
}

Outcome decomposition_identities() {
  Rng rng(1007);
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const FactorGrid2 g2{testing::uniform_real(rng, -1, 1), testing::uniform_real(rng, -1, 1),
                         testing::uniform_real(rng, -1, 1), testing::uniform_real(rng, -1, 1)};
    const DecompositionReport r2 = biewen2(g2);
    std::array<double, 8> v{};
    for (double& x : v) x = testing::uniform_real(rng, 0, 1);
    const DecompositionReport r3 = biewen3(FactorGrid3::of_points(v));
    worst = std::max({worst, std::abs(r2.total_change.lo - component_sum(r2)),
                      std::abs(r3.total_change.lo - component_sum(r3))});
  }
  std::array<double, 8> v{};
  for (int a = 0; a < 2; ++a)
    for (int pr = 0; pr < 2; ++pr)
      for (int pe = 0; pe < 2; ++pe) v[FactorGrid3::index(a, pr, pe)] = (a ? 2 : 1) * (pr ? 3 : 1) * (pe ? 4 : 1);
  const DecompositionReport m = biewen3(FactorGrid3::of_points(v));
  const auto val = [&](const char* name) { return m.component(name).value.lo; };
  const bool fixture = m.total_change.lo == 23.0 && val("availability") == 1.0 && val("race_preferences") == 2.0 &&
                       val("education_preferences") == 3.0 && val("race_preferences_x_availability") == 2.0 &&
                       val("education_preferences_x_availability") == 3.0 &&
                       val("education_preferences_x_race_preferences") == 6.0 && val("residuum") == 6.0;
  return {worst <= 1e-12 && fixture,
          "10000 grids, max gap " + fmt_double(worst) + ", fixture " + (fixture ? "23 = 6 + 11 + 6" : "wrong")};
}

// The criterion-8 corpus, shared by the hull and determinism checks.
std::vector<GnmProblem> gnm_corpus() {
  Rng rng(1008);
  std::vector<GnmProblem> out;
  for (int i = 0; i < 100; ++i) out.push_back(testing::small_gnm_instance(rng, 30));
  return out;
}

bool same_interval(const MomentInterval& a, const MomentInterval& b) {
  return std::abs(a.min_value - b.min_value) <= 1e-12 && std::abs(a.max_value - b.max_value) <= 1e-12 &&
         a.n_lattice == b.n_lattice && a.n_feasible == b.n_feasible &&
         a.n_excluded_negative == b.n_excluded_negative && a.step1 == b.step1;
}

// Result of one search, or the error category it raised.
struct Run {
  std::optional<MomentInterval> interval;
  int error = -1;
};

template <typename Fn>
Run attempt(Fn&& fn) {
  Run r;
  try {
    r.interval = fn();
  } catch (const Error& e) {
    r.error = static_cast<int>(e.category());
  }
  return r;
}

Outcome oracle_equivalence(const std::vector<GnmProblem>& corpus) {
  int mismatches = 0;
  int compared = 0;
  int errors = 0;
  double slowest = 0.0;
  for (GnmProblem p : corpus) {
    const auto t0 = Clock::now();
    for (SortOrder order : {SortOrder::RaceFirst, SortOrder::EducationFirst}) {
      for (Objective obj : {Objective::Sehc, Objective::Sirm}) {
        p.order = order;
        p.objective = obj;
        const Run got = attempt([&] { return gnm_interval(p); });
        const Run want = attempt([&] { return oracle::enumerate_gnm(p); });
        ++compared;
        if (got.error != want.error) ++mismatches;
        else if (got.interval && !same_interval(*got.interval, *want.interval)) ++mismatches;
        if (got.error >= 0) ++errors;
      }
    }
    slowest = std::max(slowest, seconds_since(t0));
  }
  return {mismatches == 0 && slowest < 10.0,
          std::to_string(compared) + " searches on 100 instances, " + std::to_string(mismatches) + " mismatches, " +
              std::to_string(errors) + " raised the same error in both, slowest instance " + fmt_double(slowest) + " s"};
}

Outcome degenerate_time_identity() {
  Rng rng(1009);
  double worst = 0.0;
  int outside = 0;
  int not_point = 0;
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const GnmProblem base = testing::small_gnm_instance(rng);
    const ContingencyTable& k = base.race_pref;
    GnmProblem p{k, k, k, base.layout};
    for (SortOrder order : {SortOrder::RaceFirst, SortOrder::EducationFirst}) {
      for (Objective obj : {Objective::Sehc, Objective::Sirm}) {
        p.order = order;
        p.objective = obj;
        const MomentInterval mi = gnm_interval(p);
        const Assembly a = assemble_counterfactual(p, ContingencyTable(mi.step1), observed_allocation(p, order));
        worst = std::max(worst, (a.table.counts() - k.counts()).cwiseAbs().maxCoeff());
        const double v = evaluate_objective(obj, k, p.layout);
        if (!(mi.min_value <= v && v <= mi.max_value)) ++outside;
        GnmProblem obs = p;
        obs.mode = SearchMode::ObservedPoint;
        const MomentInterval point = gnm_interval(obs);
        if (point.min_value != v || point.max_value != v) ++not_point;
        ++checked;
      }
    }
  }
  return {worst == 0.0 && outside == 0 && not_point == 0,
          std::to_string(checked) + " cases, reproduction deviation " + fmt_double(worst) + ", " +
              std::to_string(outside) + " observed moments outside, " + std::to_string(not_point) +
              " observed-point intervals not [v,v]"};
}

Outcome hull(const std::vector<GnmProblem>& corpus) {
  int violations = 0;
  int checked = 0;
  for (GnmProblem p : corpus) {
    p.order = SortOrder::BothOrders;
    for (Objective obj : {Objective::Sehc, Objective::Sirm}) {
      p.objective = obj;
      const Run both = attempt([&] { return gnm_interval(p); });
      if (!both.interval) continue;
      for (const MomentInterval& single : both.interval->per_order)
        if (!both.interval->contains(single)) ++violations;
      if (both.interval->per_order.size() != 2) ++violations;
      ++checked;
    }
  }
  return {violations == 0 && checked > 0,
          std::to_string(checked) + " hulls, " + std::to_string(violations) + " violations"};
}

Outcome parallel_equivalence(const std::vector<GnmProblem>& corpus) {
  testing::TempDir dir;
  int differ = 0;
  int reports = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const GnmProblem& p = corpus[i];
    const std::string tag = std::to_string(i);
    cli::GnmArgs a;
    a.race_pref = dir.write("tr" + tag + ".csv", p.race_pref, p.layout);
    a.availability = dir.write("ta" + tag + ".csv", p.availability, p.layout);
    a.edu_pref = dir.write("te" + tag + ".csv", p.edu_pref, p.layout);
    for (SortOrder order : {SortOrder::RaceFirst, SortOrder::EducationFirst, SortOrder::BothOrders}) {
      for (Objective obj : {Objective::Sehc, Objective::Sirm}) {
        a.order = order;
        a.objective = obj;
        a.jobs = 1;
        const cli::CommandOutput one = cli::cmd_gnm(a);
        a.jobs = 8;
        const cli::CommandOutput eight = cli::cmd_gnm(a);
        if (one.text != eight.text || one.exit_code != eight.exit_code) ++differ;
        ++reports;
      }
    }
  }
  return {differ == 0, std::to_string(reports) + " report pairs, " + std::to_string(differ) + " differ"};
}

// Synthetic race-by-education table: education cells favour the diagonal by
// exp(lambda) and fall off with distance; each racial block is scaled to its
// share of couples.
ContingencyTable shaped(const RaceEduLayout& layout, double total, double black, const std::array<double, 3>& edu,
                        double inter, double lambda) {
  auto share = [&](int hr, int wr) { return hr == wr ? (hr == 0 ? black : 1.0 - black) : inter * (hr == 0 ? 0.6 : 0.4); };
  Matrix w(6, 6);
  for (int hr = 0; hr < 2; ++hr)
    for (int wr = 0; wr < 2; ++wr) {
      Matrix b(3, 3);
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) b(k, l) = edu[k] * edu[l] * std::exp(lambda * (k == l ? 1.0 : -0.5 * std::abs(k - l)));
      w.block(hr * 3, wr * 3, 3, 3) = b * (share(hr, wr) / b.sum());
    }
  w /= w.sum();
  return layout.make_table((w * total).array().round().max(1.0).matrix());
}

Outcome desk_scale() {
  RaceEduLayout layout;
  const ContingencyTable k0 = shaped(layout, 10000, 0.09, {0.35, 0.40, 0.25}, 0.02, 1.1);
  const ContingencyTable k1 = shaped(layout, 10000, 0.10, {0.25, 0.42, 0.33}, 0.04, 1.0);
  testing::TempDir dir;
  cli::DecomposeArgs a;
  a.k0 = dir.write("k0.csv", k0, layout);
  a.k1 = dir.write("k1.csv", k1, layout);
  a.mode = cli::DecomposeArgs::Mode::TwoDim;
  const auto t0 = Clock::now();
  bool finite = true;
  int exit_code = 0;
  std::size_t components = 0;
  for (Objective obj : {Objective::Sehc, Objective::Sirm}) {
    a.objective = obj;
    const cli::CommandOutput out = cli::cmd_decompose(a);
    exit_code = std::max(exit_code, out.exit_code);
    if (out.exit_code != 0) continue;
    const nlohmann::json doc = nlohmann::json::parse(out.text);
    for (const auto& c : doc["result"]["components"]) {
      ++components;
      finite = finite && c["min"].is_number() && c["max"].is_number() && std::isfinite(c["min"].get<double>()) &&
               std::isfinite(c["max"].get<double>());
    }
  }
  const double s = seconds_since(t0);
  const double inter0 = sirm(k0, layout);
  const double inter1 = sirm(k1, layout);
  return {exit_code == 0 && finite && components == 14 && s < 600.0,
          "totals " + std::to_string(static_cast<long>(k0.total())) + "/" +
              std::to_string(static_cast<long>(k1.total())) + ", inter-racial " + fmt_double(inter0) +
              "/" + fmt_double(inter1) + ", " + std::to_string(components) + " components " +
              (finite ? "finite" : "not finite") + ", exit " + std::to_string(exit_code) + ", " + fmt_double(s) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::off);
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  std::vector<GnmProblem> corpus;
  auto shared_corpus = [&]() -> const std::vector<GnmProblem>& {
    if (corpus.empty()) corpus = gnm_corpus();
    return corpus;
  };
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"Liu-Lu simplified measure", liu_lu_correctness},
      {"NM marginal fidelity, measure preservation, identity", nm_invariants},
      {"NM closed-form fixtures", closed_form},
      {"NM commutes with merging", merge_commutation},
      {"NM on sources with zero cells", zero_robustness},
      {"NM signals incompatible targets", negative_signalling},
      {"decomposition identities", decomposition_identities},
      {"GNM search equals enumeration", [&] { return oracle_equivalence(shared_corpus()); }},
      {"degenerate-time identity", degenerate_time_identity},
      {"both-orders hull", [&] { return hull(shared_corpus()); }},
      {"reports independent of jobs", [&] { return parallel_equivalence(shared_corpus()); }},
      {"desk-scale two-dimensional decomposition", desk_scale},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(n)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", n, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
