#pragma once

#include <optional>
#include <string>
#include <vector>

#include "homogamy/gnm.hpp"

namespace homogamy::cli {

/// Process exit status for each error category.
int exit_code(ErrorCategory category);

struct CommandOutput {
  int exit_code = 0;
  std::string text;  ///< JSON report, or CSV for ingest
};

struct MeasureArgs {
  std::string table;
};

struct NmArgs {
  std::string source;
  std::optional<std::string> targets;  ///< table whose marginals are the targets
  std::vector<double> rows;
  std::vector<double> cols;
  bool allow_forced_cuts = false;
};

struct GnmArgs {
  std::string race_pref;
  std::string availability;
  std::string edu_pref;
  SortOrder order = SortOrder::RaceFirst;
  Objective objective = Objective::Sehc;
  double epsilon = 1e-9;
  bool keep_negative = false;
  SearchMode mode = SearchMode::FullLattice;
  EducationSource edu_source = EducationSource::EducationTime;
  unsigned jobs = 1;
};

struct DecomposeArgs {
  enum class Mode { OneDim, TwoDim };
  std::string k0;
  std::string k1;
  Mode mode = Mode::TwoDim;
  Objective objective = Objective::Sehc;
  SortOrder order = SortOrder::RaceFirst;
  double epsilon = 1e-9;
  bool keep_negative = false;
  EducationSource edu_source = EducationSource::EducationTime;
  unsigned jobs = 1;
};

struct IngestArgs {
  std::string microdata;
  RaceEduLayout layout;
  std::vector<std::string> filters;
  /// Round cells to the nearest integer (weighted data).
  bool round = false;
};

/// Each command catches library errors and reports them as a JSON error
/// document with the matching exit code.
CommandOutput cmd_measure(const MeasureArgs& args);
CommandOutput cmd_nm(const NmArgs& args);
CommandOutput cmd_gnm(const GnmArgs& args);
CommandOutput cmd_decompose(const DecomposeArgs& args);
CommandOutput cmd_ingest(const IngestArgs& args);

SortOrder parse_order(const std::string& s);
Objective parse_objective(const std::string& s);
SearchMode parse_mode(const std::string& s);
EducationSource parse_edu_source(const std::string& s);
DecomposeArgs::Mode parse_decompose_mode(const std::string& s);

}  // namespace homogamy::cli
