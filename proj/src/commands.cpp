#include "homogamy/commands.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <spdlog/spdlog.h>

#include "homogamy/csv_io.hpp"
#include "homogamy/decomp.hpp"
#include "homogamy/liulu.hpp"
#include "homogamy/nm.hpp"
#include "homogamy/report.hpp"

namespace homogamy::cli {

namespace {

using report::Json;

const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Validation: return "validation";
    case ErrorCategory::Parse: return "parse";
    case ErrorCategory::DegenerateCut: return "degenerate_cut";
    case ErrorCategory::NoFeasiblePoint: return "no_feasible_point";
  }
  return "unknown";
}

CommandOutput guarded(const std::string& command, const std::function<CommandOutput()>& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    spdlog::error("{}: {}", command, e.what());
    Json detail{{"line", e.line()}, {"column", e.column()}};
    return {exit_code(e.category()), report::dump(report::error_envelope(command, "parse", e.what(), detail))};
  } catch (const DegenerateCutError& e) {
    spdlog::error("{}: {}", command, e.what());
    Json detail{{"cut_row", e.cut_row()}, {"cut_col", e.cut_col()}};
    return {exit_code(e.category()), report::dump(report::error_envelope(command, "degenerate_cut", e.what(), detail))};
  } catch (const Error& e) {
    spdlog::error("{}: {}", command, e.what());
    return {exit_code(e.category()),
            report::dump(report::error_envelope(command, category_name(e.category()), e.what(), nullptr))};
  }
}

RaceEduLayout common_layout(const std::vector<const LabeledTable*>& tables, const std::vector<std::string>& names) {
  const RaceEduLayout layout = infer_layout(*tables[0]);
  for (std::size_t i = 1; i < tables.size(); ++i) {
    if (!(infer_layout(*tables[i]) == layout)) {
      throw ValidationError(names[i] + " uses different race or education labels than " + names[0]);
    }
  }
  return layout;
}

std::optional<RaceEduLayout> try_layout(const LabeledTable& t) {
  try {
    return infer_layout(t);
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

void flag_diagnostics(const LiuLuMatrix& ll, std::vector<std::string>& out) {
  for (std::size_t i = 1; i <= ll.cut_rows(); ++i) {
    for (std::size_t j = 1; j <= ll.cut_cols(); ++j) {
      const CutFlag f = ll.flag(i, j);
      if (f != CutFlag::Ok) {
        out.push_back("cut (" + std::to_string(i) + "," + std::to_string(j) + "): " + std::string(to_string(f)));
      }
    }
  }
}

Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

}  // namespace

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Validation:
    case ErrorCategory::Parse: return 2;
    case ErrorCategory::DegenerateCut: return 3;
    case ErrorCategory::NoFeasiblePoint: return 4;
  }
  return 1;
}

CommandOutput cmd_measure(const MeasureArgs& args) {
  return guarded("measure", [&] {
    const LabeledTable lt = read_table_csv_file(args.table);
    const ContingencyTable& t = lt.table;
    std::vector<std::string> diagnostics;
    Json result;
    result["table"] = report::table(t);
    if (t.rows() == 2 && t.cols() == 2) {
      try {
        const LiuLuValue v = ll_simple(cut_aggregate(t, 1, 1));
        result["ll_simple"] = Json{{"value", report::number(v.value)}, {"flag", std::string(to_string(v.flag))}};
      } catch (const DegenerateDenominator&) {
        result["ll_simple"] =
            Json{{"value", nullptr}, {"flag", std::string(to_string(CutFlag::DegenerateDenominator))}};
      }
    } else {
      result["ll_simple"] = nullptr;
    }
    const LiuLuMatrix ll = ll_generalized(t);
    result["ll_generalized"] = report::liu_lu(ll);
    flag_diagnostics(ll, diagnostics);
    if (const auto layout = try_layout(lt)) {
      result["sehc"] = report::number(sehc(t, *layout));
      result["sirm"] = report::number(sirm(t, *layout));
    } else {
      result["sehc"] = nullptr;
      result["sirm"] = nullptr;
    }
    return CommandOutput{0, report::dump(report::envelope("measure", {{"table", args.table}}, std::move(result), diagnostics))};
  });
}

CommandOutput cmd_nm(const NmArgs& args) {
  return guarded("nm", [&] {
    const LabeledTable src = read_table_csv_file(args.source);
    std::vector<report::Input> inputs{{"source", args.source}};
    TargetMarginals targets;
    if (args.targets) {
      if (!args.rows.empty() || !args.cols.empty()) throw ValidationError("give either a targets table or --rows/--cols");
      targets = TargetMarginals::of(read_table_csv_file(*args.targets).table);
      inputs.push_back({"targets", *args.targets});
    } else {
      if (args.rows.empty() || args.cols.empty()) throw ValidationError("nm needs a targets table or both --rows and --cols");
      targets.rows = to_vector(args.rows);
      targets.cols = to_vector(args.cols);
    }
    NmOptions options;
    options.allow_forced_cuts = args.allow_forced_cuts;
    const NmResult r = nm_transform(src.table, targets, options);

    std::vector<std::string> diagnostics;
    if (r.has_negative()) {
      diagnostics.push_back(std::to_string(r.negative_cells.size()) +
                            " negative cells: preferences and targets are incompatible");
    }
    LiuLuMatrix flags;
    flags.values = Matrix::Zero(static_cast<Eigen::Index>(src.table.rows() - 1), static_cast<Eigen::Index>(src.table.cols() - 1));
    flags.flags = r.cut_flags;
    flag_diagnostics(flags, diagnostics);
    Json result = report::nm_result(r);
    if (!args.targets) {
      result["target_rows"] = args.rows;
      result["target_cols"] = args.cols;
    }
    return CommandOutput{0, report::dump(report::envelope("nm", inputs, std::move(result), diagnostics))};
  });
}

CommandOutput cmd_gnm(const GnmArgs& args) {
  return guarded("gnm", [&] {
    const LabeledTable tr = read_table_csv_file(args.race_pref);
    const LabeledTable ta = read_table_csv_file(args.availability);
    const LabeledTable te = read_table_csv_file(args.edu_pref);
    const RaceEduLayout layout = common_layout({&ta, &tr, &te}, {"availability", "race_pref", "edu_pref"});
    GnmProblem p{tr.table, ta.table, te.table, layout};
    p.order = args.order;
    p.objective = args.objective;
    p.epsilon = args.epsilon;
    p.keep_negative = args.keep_negative;
    p.mode = args.mode;
    p.edu_source = args.edu_source;
    p.jobs = args.jobs;
    const MomentInterval mi = gnm_interval(p);

    std::vector<std::string> diagnostics;
    if (mi.n_excluded_negative > 0) {
      diagnostics.push_back(std::to_string(mi.n_excluded_negative) + " allocations excluded for negative cells");
    }
    if (!mi.observed_value) diagnostics.push_back("observed allocation is not a feasible lattice point");
    Json result = report::moment_interval(mi, layout, args.objective);
    result["mode"] = std::string(to_string(args.mode));
    result["education_source"] = std::string(to_string(args.edu_source));
    result["epsilon"] = args.epsilon;
    result["keep_negative"] = args.keep_negative;
    const std::vector<report::Input> inputs{
        {"race_pref", args.race_pref}, {"availability", args.availability}, {"edu_pref", args.edu_pref}};
    return CommandOutput{0, report::dump(report::envelope("gnm", inputs, std::move(result), diagnostics))};
  });
}

CommandOutput cmd_decompose(const DecomposeArgs& args) {
  return guarded("decompose", [&] {
    const LabeledTable t0 = read_table_csv_file(args.k0);
    const LabeledTable t1 = read_table_csv_file(args.k1);
    DecompositionReport r;
    Json result;
    if (args.mode == DecomposeArgs::Mode::TwoDim) {
      const RaceEduLayout layout = common_layout({&t0, &t1}, {"K0", "K1"});
      TwoDimOptions o;
      o.objective = args.objective;
      o.order = args.order;
      o.epsilon = args.epsilon;
      o.keep_negative = args.keep_negative;
      o.edu_source = args.edu_source;
      o.jobs = args.jobs;
      r = decompose_two_dim(t0.table, t1.table, layout, o);
      result["mode"] = "two-dim";
      result["order"] = std::string(to_string(args.order));
    } else {
      Moment moment;
      if (const auto layout = try_layout(t0)) {
        common_layout({&t0, &t1}, {"K0", "K1"});
        moment = [layout = *layout, obj = args.objective](const ContingencyTable& t) {
          return evaluate_objective(obj, t, layout);
        };
      } else if (args.objective == Objective::Sehc && t0.table.rows() == t0.table.cols()) {
        // Unlabelled square table: categories are education levels.
        moment = [](const ContingencyTable& t) { return t.counts().trace() / t.total(); };
      } else {
        throw ValidationError("the sirm objective needs race-by-education tables");
      }
      r = decompose_one_dim(t0.table, t1.table, moment);
      result["mode"] = "one-dim";
    }
    result["objective"] = std::string(to_string(args.objective));
    const Json body = report::decomposition(r);
    for (auto it = body.begin(); it != body.end(); ++it) result[it.key()] = it.value();
    return CommandOutput{0, report::dump(report::envelope("decompose", {{"K0", args.k0}, {"K1", args.k1}},
                                                          std::move(result), r.diagnostics))};
  });
}

CommandOutput cmd_ingest(const IngestArgs& args) {
  return guarded("ingest", [&] {
    args.layout.validate();
    std::vector<RowFilter> filters;
    for (const std::string& f : args.filters) filters.push_back(RowFilter::parse(f));
    std::ifstream in(args.microdata);
    if (!in) throw ValidationError("cannot open " + args.microdata);
    const std::vector<CoupleRecord> records = read_microdata_csv(in, filters);
    spdlog::info("ingest: {} records after filtering", records.size());
    ContingencyTable t = from_microdata(records, args.layout);
    if (args.round) t = args.layout.make_table(t.counts().array().round().matrix());
    std::ostringstream out;
    write_table_csv(out, t, args.layout);
    return CommandOutput{0, out.str()};
  });
}

SortOrder parse_order(const std::string& s) {
  if (s == "race-first") return SortOrder::RaceFirst;
  if (s == "edu-first") return SortOrder::EducationFirst;
  if (s == "both") return SortOrder::BothOrders;
  throw ValidationError("unknown order '" + s + "' (race-first, edu-first, both)");
}

Objective parse_objective(const std::string& s) {
  if (s == "sehc") return Objective::Sehc;
  if (s == "sirm") return Objective::Sirm;
  throw ValidationError("unknown objective '" + s + "' (sehc, sirm)");
}

SearchMode parse_mode(const std::string& s) {
  if (s == "full") return SearchMode::FullLattice;
  if (s == "observed") return SearchMode::ObservedPoint;
  throw ValidationError("unknown search mode '" + s + "' (full, observed)");
}

EducationSource parse_edu_source(const std::string& s) {
  if (s == "edu-time") return EducationSource::EducationTime;
  if (s == "race-time") return EducationSource::RaceTime;
  throw ValidationError("unknown education source '" + s + "' (edu-time, race-time)");
}

DecomposeArgs::Mode parse_decompose_mode(const std::string& s) {
  if (s == "one-dim") return DecomposeArgs::Mode::OneDim;
  if (s == "two-dim") return DecomposeArgs::Mode::TwoDim;
  throw ValidationError("unknown decomposition mode '" + s + "' (one-dim, two-dim)");
}

}  // namespace homogamy::cli
