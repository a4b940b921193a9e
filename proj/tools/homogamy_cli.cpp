#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "homogamy/commands.hpp"

namespace {

using namespace homogamy;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("homogamy");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("HOMOGAMY_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

struct SearchFlags {
  std::string order = "race-first";
  std::string objective = "sehc";
  double epsilon = 1e-9;
  unsigned jobs = 1;
  bool keep_negative = false;
  std::string edu_source = "edu-time";
};

void add_search_flags(CLI::App* cmd, SearchFlags& f) {
  cmd->add_option("--order", f.order, "race-first, edu-first or both")
      ->check(CLI::IsMember({"race-first", "edu-first", "both"}))
      ->capture_default_str();
  cmd->add_option("--objective", f.objective, "sehc or sirm")->check(CLI::IsMember({"sehc", "sirm"}))->capture_default_str();
  cmd->add_option("--epsilon", f.epsilon, "allocations with a cell below -epsilon are excluded")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--jobs", f.jobs, "worker threads for the lattice search")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_flag("--keep-negative", f.keep_negative, "keep allocations with negative cells (diagnostic)");
  cmd->add_option("--edu-source", f.edu_source, "education preferences inside racial blocks: edu-time or race-time")
      ->check(CLI::IsMember({"edu-time", "race-time"}))
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Counterfactual contingency tables and preference decompositions for race and education matching"};
  app.require_subcommand(1);
  std::string output_path;
  app.add_option("-o,--output", output_path, "write the report here instead of stdout");

  cli::MeasureArgs measure;
  auto* measure_cmd = app.add_subcommand("measure", "Liu-Lu measures and moments of a table");
  measure_cmd->add_option("table", measure.table, "table CSV")->required()->check(CLI::ExistingFile);

  cli::NmArgs nm;
  std::string nm_targets;
  auto* nm_cmd = app.add_subcommand("nm", "counterfactual with the source's preferences and new marginals");
  nm_cmd->add_option("source", nm.source, "preference source table CSV")->required()->check(CLI::ExistingFile);
  nm_cmd->add_option("targets", nm_targets, "table CSV supplying the target marginals")->check(CLI::ExistingFile);
  nm_cmd->add_option("--rows", nm.rows, "target row totals")->delimiter(',');
  nm_cmd->add_option("--cols", nm.cols, "target column totals")->delimiter(',');
  nm_cmd->add_flag("--allow-forced-cuts", nm.allow_forced_cuts, "accept target cuts fixed by the marginals alone");

  cli::GnmArgs gnm;
  SearchFlags gnm_flags;
  std::string gnm_mode = "full";
  bool observed_point = false;
  auto* gnm_cmd = app.add_subcommand("gnm", "moment interval over the counterfactual allocation lattice");
  gnm_cmd->add_option("race_pref", gnm.race_pref, "table supplying race preferences")->required()->check(CLI::ExistingFile);
  gnm_cmd->add_option("availability", gnm.availability, "table supplying availability")->required()->check(CLI::ExistingFile);
  gnm_cmd->add_option("edu_pref", gnm.edu_pref, "table supplying education preferences")->required()->check(CLI::ExistingFile);
  add_search_flags(gnm_cmd, gnm_flags);
  gnm_cmd->add_option("--mode", gnm_mode, "full or observed")->check(CLI::IsMember({"full", "observed"}))->capture_default_str();
  gnm_cmd->add_flag("--observed-point", observed_point, "same as --mode observed");

  cli::DecomposeArgs dec;
  SearchFlags dec_flags;
  std::string dec_mode = "two-dim";
  auto* dec_cmd = app.add_subcommand("decompose", "decompose the change in a moment between two tables");
  dec_cmd->add_option("K0", dec.k0, "earlier table")->required()->check(CLI::ExistingFile);
  dec_cmd->add_option("K1", dec.k1, "later table")->required()->check(CLI::ExistingFile);
  dec_cmd->add_option("--mode", dec_mode, "one-dim or two-dim")->check(CLI::IsMember({"one-dim", "two-dim"}))->capture_default_str();
  add_search_flags(dec_cmd, dec_flags);

  cli::IngestArgs ingest;
  std::string races = "B,W";
  std::string male_edu = "L,M,H";
  std::string female_edu = "L,M,H";
  auto* ingest_cmd = app.add_subcommand("ingest", "cross-tabulate couple microdata into a race-by-education table");
  ingest_cmd->add_option("microdata", ingest.microdata, "couple records CSV")->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--races", races, "the two race labels, in table order")->capture_default_str();
  ingest_cmd->add_option("--male-edu", male_edu, "husband education levels, ascending")->capture_default_str();
  ingest_cmd->add_option("--female-edu", female_edu, "wife education levels, ascending")->capture_default_str();
  ingest_cmd->add_option("--filter", ingest.filters, "row predicate such as age>=30 (repeatable)");
  ingest_cmd->add_flag("--round", ingest.round, "round weighted cells to integers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  cli::CommandOutput out;
  try {
    if (*measure_cmd) {
      out = cli::cmd_measure(measure);
    } else if (*nm_cmd) {
      if (!nm_targets.empty()) nm.targets = nm_targets;
      out = cli::cmd_nm(nm);
    } else if (*gnm_cmd) {
      gnm.order = cli::parse_order(gnm_flags.order);
      gnm.objective = cli::parse_objective(gnm_flags.objective);
      gnm.epsilon = gnm_flags.epsilon;
      gnm.jobs = gnm_flags.jobs;
      gnm.keep_negative = gnm_flags.keep_negative;
      gnm.edu_source = cli::parse_edu_source(gnm_flags.edu_source);
      gnm.mode = observed_point ? SearchMode::ObservedPoint : cli::parse_mode(gnm_mode);
      out = cli::cmd_gnm(gnm);
    } else if (*dec_cmd) {
      dec.mode = cli::parse_decompose_mode(dec_mode);
      dec.order = cli::parse_order(dec_flags.order);
      dec.objective = cli::parse_objective(dec_flags.objective);
      dec.epsilon = dec_flags.epsilon;
      dec.jobs = dec_flags.jobs;
      dec.keep_negative = dec_flags.keep_negative;
      dec.edu_source = cli::parse_edu_source(dec_flags.edu_source);
      out = cli::cmd_decompose(dec);
    } else if (*ingest_cmd) {
      const auto split = [](const std::string& s) {
        std::vector<std::string> parts;
        std::string cur;
        for (char c : s + ",") {
          if (c == ',') {
            if (!cur.empty()) parts.push_back(cur);
            cur.clear();
          } else {
            cur += c;
          }
        }
        return parts;
      };
      const auto r = split(races);
      if (r.size() != 2) {
        std::cerr << "--races needs exactly two labels\n";
        return 2;
      }
      ingest.layout.races = {r[0], r[1]};
      ingest.layout.male_edu = split(male_edu);
      ingest.layout.female_edu = split(female_edu);
      out = cli::cmd_ingest(ingest);
    }
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return cli::exit_code(e.category());
  }

  if (output_path.empty()) {
    std::cout << out.text;
  } else {
    std::ofstream f(output_path, std::ios::binary);
    if (!f) {
      std::cerr << "cannot write " << output_path << "\n";
      return 2;
    }
    f << out.text;
  }
  return out.exit_code;
}
