#include "fedmdp/fedmdp.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace fedmdp;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

std::string format_cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void print_summary_table(const std::vector<Summary>& summaries) {
  const std::vector<std::string> header{"experiment", "algorithm", "E", "kappa", "metric", "mean", "stderr", "count"};
  std::vector<std::vector<std::string>> cells{header};
  for (const Summary& s : summaries) {
    cells.push_back({s.experiment, s.algorithm, s.E ? s.E->to_string() : "-", s.kappa ? format_cell(*s.kappa) : "-",
                     s.metric, format_cell(s.mean), format_cell(s.stderr_), std::to_string(s.count)});
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const bool numeric = c >= 5;
      const std::string pad(width[c] - row[c].size(), ' ');
      line += numeric ? pad + row[c] : row[c] + pad;
      if (c + 1 < row.size()) line += "  ";
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    std::cout << line << '\n';
  }
}

std::filesystem::path output_dir(const std::string& flag, const RunConfig& rc) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("FEDMDP_OUT"); env && *env) return env;
  if (!rc.spec.output_dir.empty()) return rc.spec.output_dir;
  return "results";
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides, int workers_flag,
            const std::string& out_flag, bool verbose) {
  RunConfig rc;
  try {
    rc = load_config(config_path, overrides);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  }
  const int workers = workers_flag > 0 ? workers_flag : rc.workers;
  const std::filesystem::path dir = output_dir(out_flag, rc);
  const std::string id = rc.spec.experiment_id();
  if (verbose || rc.verbosity > 0) {
    std::cerr << "running " << id << " (" << to_string(rc.spec.kind) << ", " << rc.spec.num_task_seeds
              << " seeds, " << workers << " workers)\n";
  }
  const std::vector<ResultRow> rows = run_experiment(rc.spec, workers);
  const std::filesystem::path rows_path = dir / (id + "_rows.csv");
  const std::filesystem::path summary_path = dir / (id + "_summary.csv");
  write_results(rows, rows_path);
  const std::vector<Summary> summaries = rows.empty() ? std::vector<Summary>{} : summarize(rows);
  write_results(summaries, summary_path);
  print_summary_table(summaries);
  std::cerr << "wrote " << rows_path.string() << " and " << summary_path.string() << '\n';
  return kOk;
}

int cmd_verify(const std::string& suite, std::uint64_t seed) {
  if (!checks::is_suite(suite)) {
    std::cerr << "unknown suite '" << suite << "'\n";
    return kUsage;
  }
  const std::vector<checks::PropertyResult> results = checks::run_suite(suite, seed);
  const checks::PropertyResult* first_failure = nullptr;
  for (const checks::PropertyResult& r : results) {
    std::printf("%-28s %s  worst_slack=%.6g  cases=%d\n", r.name.c_str(), r.passed ? "pass" : "FAIL", r.worst_slack,
                r.cases);
    if (!r.passed && !first_failure) first_failure = &r;
  }
  if (first_failure) {
    std::cerr << "property failed: " << first_failure->name << '\n';
    return kFailure;
  }
  return kOk;
}

int cmd_show(const std::string& csv, const std::string& algo, const std::string& e, const std::string& kappa) {
  std::vector<ResultRow> rows = read_results(csv);
  std::optional<CommPeriod> e_filter;
  std::optional<double> kappa_filter;
  try {
    if (!e.empty()) e_filter = CommPeriod::parse(e);
    if (!kappa.empty()) kappa_filter = parse_double(kappa);
  } catch (const InvalidArgument& ex) {
    std::cerr << ex.what() << '\n';
    return kUsage;
  }
  std::erase_if(rows, [&](const ResultRow& r) {
    return (!algo.empty() && r.algorithm != algo) || (e_filter && r.E != e_filter) ||
           (kappa_filter && r.kappa != kappa_filter);
  });
  if (rows.empty()) {
    std::cout << "no rows\n";
    return kOk;
  }
  print_summary_table(summarize(rows));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated tabular RL experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  int workers = 0;
  bool verbose = false;
  CLI::App* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Config file (JSON)")->required();
  run->add_option("--override", overrides, "key=value, repeatable; value read as JSON when it parses");
  run->add_option("--workers", workers, "Parallel task seeds")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory (default: $FEDMDP_OUT, then config, then ./results)");
  run->add_flag("-v,--verbose", verbose, "Progress on stderr");

  std::string suite;
  std::uint64_t seed = 0;
  CLI::App* verify = app.add_subcommand("verify", "Run a property suite");
  verify->add_option("suite", suite, "lemmas | qavg_bound | counterexample | contraction | gradients | all")->required();
  verify->add_option("--seed", seed, "Seed for randomized instances");

  std::string csv, algo, e, kappa;
  CLI::App* show = app.add_subcommand("show", "Summarize a rows CSV");
  show->add_option("csv", csv, "Rows CSV written by run")->required();
  show->add_option("--algo", algo, "Keep one algorithm");
  show->add_option("--E", e, "Keep one communication period");
  show->add_option("--kappa", kappa, "Keep one kappa");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kUsage;
  }

  try {
    if (*run) return cmd_run(config_path, overrides, workers, out_dir, verbose);
    if (*verify) return cmd_verify(suite, seed);
    if (*show) return cmd_show(csv, algo, e, kappa);
  } catch (const ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << '\n';
    return kUsage;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
