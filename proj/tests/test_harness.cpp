#include "fedmdp/harness.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace fedmdp;

namespace {

ExperimentSpec small_spec(ExperimentKind kind) {
  ExperimentSpec s;
  s.kind = kind;
  s.family.num_states = 4;
  s.family.num_actions = 2;
  s.n = 3;
  s.num_task_seeds = 3;
  s.seed = 10;
  s.algorithms = {Algorithm::qavg};
  s.E_list = {CommPeriod(2)};
  s.T = {{Algorithm::qavg, 200}, {Algorithm::projpavg, 100}, {Algorithm::softpavg, 100}};
  s.record_every = 50;
  s.novel_env_count = 4;
  return s;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("fedmdp_harness_" + name);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_metric(const std::vector<ResultRow>& rows, const std::string& metric) {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [&](const ResultRow& r) { return r.metric == metric; }));
}

}  // namespace

TEST(KappaSweep, ZeroKappaEqualsTrainingOnCopiesOfBase) {
  ExperimentSpec s = small_spec(ExperimentKind::kappa_sweep);
  s.kappa_list = {0.0};
  s.num_task_seeds = 1;
  const auto rows = run_kappa_sweep(s);
  const auto draws = s.family.draw(s.seed, "transition", s.n + 1);
  const FederatedTask copies(std::vector<TabularMdp>(s.n, draws.front()), StateDistribution::uniform(4));
  const FedConfig c = s.config_for(Algorithm::qavg, CommPeriod(2));
  const double expected = value_at(draws.front(), policy_of(federated_train(copies, c).final_model), copies.d0());
  const auto it = std::find_if(rows.begin(), rows.end(), [](const ResultRow& r) { return r.metric == "p0_value"; });
  ASSERT_NE(it, rows.end());
  EXPECT_EQ(it->value, expected);
  EXPECT_EQ(count_metric(rows, "kappa1"), 1u);
}

TEST(KappaSweep, KappaOneIncreasesWithKappa) {
  ExperimentSpec s = small_spec(ExperimentKind::kappa_sweep);
  s.kappa_list = {0.0, 0.4, 0.8};
  s.num_task_seeds = 20;
  s.T = {{Algorithm::qavg, 1}};
  const auto rows = run_kappa_sweep(s, 2);
  std::map<std::uint64_t, std::vector<double>> per_seed;
  for (const auto& r : rows)
    if (r.metric == "kappa1") per_seed[r.task_seed].push_back(r.value);
  int increasing = 0;
  for (const auto& [seed, v] : per_seed) increasing += v.size() == 3 && v[0] < v[1] && v[1] < v[2];
  EXPECT_GE(increasing, 19);
}

TEST(KappaSweep, RequiresKappaList) {
  ExperimentSpec s = small_spec(ExperimentKind::kappa_sweep);
  EXPECT_THROW(run_kappa_sweep(s), InvalidArgument);
  EXPECT_THROW(run_e_sweep(s), InvalidArgument);
}

TEST(ESweep, TraceAndGapRows) {
  ExperimentSpec s = small_spec(ExperimentKind::e_sweep);
  s.E_list = {CommPeriod(1), CommPeriod(4), CommPeriod::infinity()};
  const auto rows = run_e_sweep(s);
  // iters 0, 50, ..., 200 for each of 3 E values and 3 seeds
  EXPECT_EQ(count_metric(rows, "objective"), 3u * 3u * 5u);
  EXPECT_EQ(count_metric(rows, "q_gap"), 3u * 3u * 5u);
  EXPECT_TRUE(std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.E == CommPeriod::infinity(); }));
}

TEST(ESweep, QavgLimitIndependentOfPeriod) {
  ExperimentSpec s = small_spec(ExperimentKind::e_sweep);
  s.E_list = {CommPeriod(1), CommPeriod(2), CommPeriod(4)};
  s.T = {{Algorithm::qavg, 20000}};
  s.record_every = 20000;
  const auto rows = run_e_sweep(s, 3);
  std::map<std::uint64_t, std::vector<double>> finals;
  for (const auto& r : rows)
    if (r.metric == "objective" && r.iter == 20000) finals[r.task_seed].push_back(r.value);
  for (const auto& [seed, v] : finals) {
    ASSERT_EQ(v.size(), 3u);
    EXPECT_NEAR(*std::max_element(v.begin(), v.end()), *std::min_element(v.begin(), v.end()), 1e-3);
  }
}

TEST(Generalization, RowCountAccounting) {
  ExperimentSpec s = small_spec(ExperimentKind::generalization);
  const auto rows = run_generalization(s);
  EXPECT_EQ(rows.size(), static_cast<std::size_t>(s.num_task_seeds * s.novel_env_count + s.num_task_seeds));
  EXPECT_EQ(count_metric(rows, "generalization"), 3u);
}

TEST(Generalization, ZeroWidthFamilyMatchesTrainingObjective) {
  ExperimentSpec s = small_spec(ExperimentKind::generalization);
  s.family.kind = FamilyKind::windy_cliff;
  s.family.gamma = 0.95;
  s.family.theta_low = s.family.theta_high = 0.3;
  s.num_task_seeds = 1;
  const auto rows = run_generalization(s);
  const FederatedTask task = make_windy_cliff_task(s.seed, s.n, 0.3, 0.3, 0.95);
  const TrainTrace tr = federated_train(task, s.config_for(Algorithm::qavg, CommPeriod(2)));
  const auto it = std::find_if(rows.begin(), rows.end(), [](const ResultRow& r) { return r.metric == "generalization"; });
  ASSERT_NE(it, rows.end());
  EXPECT_NEAR(it->value, tr.records.back().objective, 1e-9);
}

TEST(Generalization, FederatedAtLeastBaselineOnMostSeeds) {
  ExperimentSpec s = small_spec(ExperimentKind::generalization);
  s.family.num_states = 8;
  s.family.num_actions = 4;
  s.n = 5;
  s.kappa_list = {0.8};
  s.num_task_seeds = 100;
  s.novel_env_count = 20;
  s.include_baseline = true;
  s.T = {{Algorithm::qavg, 3000}};
  s.E_list = {CommPeriod(4)};
  const auto rows = run_generalization(s, 4);
  std::map<std::uint64_t, std::pair<double, double>> per_seed;
  for (const auto& r : rows) {
    if (r.metric != "generalization") continue;
    (r.algorithm == "qavg" ? per_seed[r.task_seed].first : per_seed[r.task_seed].second) = r.value;
  }
  int ok = 0;
  for (const auto& [seed, v] : per_seed) ok += v.first >= v.second - 1e-6;
  EXPECT_GE(ok, 85);
}

TEST(BaselineCompare, EmitsBothTraces) {
  ExperimentSpec s = small_spec(ExperimentKind::baseline_compare);
  s.algorithms = {Algorithm::qavg, Algorithm::softpavg};
  const auto rows = run_baseline_compare(s);
  std::set<std::string> algos;
  for (const auto& r : rows) algos.insert(r.algorithm);
  EXPECT_EQ(algos, (std::set<std::string>{"qavg", "qavg_baseline", "softpavg", "softpavg_baseline"}));
}

TEST(SeedIsolation, AddingAlgorithmKeepsExistingRows) {
  ExperimentSpec s = small_spec(ExperimentKind::e_sweep);
  const auto one = run_e_sweep(s);
  s.algorithms = {Algorithm::qavg, Algorithm::softpavg};
  const auto two = run_e_sweep(s);
  std::vector<ResultRow> filtered;
  std::copy_if(two.begin(), two.end(), std::back_inserter(filtered), [](const ResultRow& r) { return r.algorithm == "qavg"; });
  EXPECT_EQ(one, filtered);
}

TEST(Workers, OutputIndependentOfWorkerCount) {
  ExperimentSpec s = small_spec(ExperimentKind::e_sweep);
  s.num_task_seeds = 7;
  EXPECT_EQ(rows_to_csv(run_e_sweep(s, 1)), rows_to_csv(run_e_sweep(s, 4)));
}

TEST(PropertyCheckRows, EmitsPassAndSlackPerProperty) {
  ExperimentSpec s;
  s.kind = ExperimentKind::theorem_checks;
  s.seed = 1;
  const auto rows = run_theorem_checks(s);
  EXPECT_EQ(rows.size(), 2u * 7u);
  for (const auto& r : rows) EXPECT_EQ(r.algorithm, "check");
  const auto contraction = std::find_if(rows.begin(), rows.end(), [](const ResultRow& r) { return r.metric == "bellman_contraction.pass"; });
  ASSERT_NE(contraction, rows.end());
  EXPECT_EQ(contraction->value, 1.0);
}

TEST(Summarize, SingleRow) {
  const auto s = summarize({{"x", 1, "qavg", CommPeriod(1), 0.5, 10, "m", 3.5}});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].mean, 3.5);
  EXPECT_EQ(s[0].stderr_, 0.0);
  EXPECT_EQ(s[0].count, 1);
}

TEST(Summarize, TwoRowsHandComputed) {
  const auto s = summarize({{"x", 1, "qavg", CommPeriod(1), {}, 10, "m", 10.0}, {"x", 2, "qavg", CommPeriod(1), {}, 10, "m", 14.0}});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s[0].mean, 12.0);
  EXPECT_DOUBLE_EQ(s[0].stderr_, 2.0);
  EXPECT_EQ(s[0].count, 2);
}

TEST(Summarize, UsesFinalIterationPerSeed) {
  const auto s = summarize({{"x", 1, "qavg", {}, {}, 0, "m", 100.0}, {"x", 1, "qavg", {}, {}, 5, "m", 1.0}});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].mean, 1.0);
  EXPECT_THROW(summarize({}), InvalidArgument);
}

TEST(Summarize, OrderIndependent) {
  ExperimentSpec spec = small_spec(ExperimentKind::e_sweep);
  auto rows = run_e_sweep(spec);
  const std::string expected = summaries_to_csv(summarize(rows));
  std::mt19937 gen(3);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(rows.begin(), rows.end(), gen);
    EXPECT_EQ(summaries_to_csv(summarize(rows)), expected);
  }
}

TEST(Csv, EmptyRowsGiveHeaderOnly) {
  const auto p = temp_path("empty.csv");
  write_results(std::vector<ResultRow>{}, p);
  EXPECT_EQ(slurp(p), std::string(kRowsHeader) + "\n");
  EXPECT_TRUE(read_results(p).empty());
  write_results(std::vector<Summary>{}, p);
  EXPECT_EQ(slurp(p), std::string(kSummaryHeader) + "\n");
}

TEST(Csv, RoundTripIsExact) {
  std::vector<ResultRow> rows = {
      {"exp", 3, "qavg", CommPeriod::infinity(), 0.1, 7, "objective", 0.1 + 0.2},
      {"exp", 3, "qavg", CommPeriod(4), std::nullopt, 0, "kappa1", 1.0 / 3.0},
      {"exp", 1, "softpavg", std::nullopt, 0.8, 2000, "p0_value", -1e-300},
      {"exp", 2, "projpavg", CommPeriod(1), 0.0, 5, "objective", 123456789.123456789},
  };
  const auto p = temp_path("roundtrip.csv");
  write_results(rows, p);
  auto back = read_results(p);
  sort_rows(rows);
  EXPECT_EQ(back, rows);
  const std::string text = slurp(p);
  EXPECT_EQ(text.substr(0, text.find('\n')), kRowsHeader);
  EXPECT_NE(text.find(",inf,"), std::string::npos);
  EXPECT_NE(text.find("0.30000000000000004"), std::string::npos);
}

TEST(Csv, PersistedSummariesEqualInMemory) {
  ExperimentSpec spec = small_spec(ExperimentKind::e_sweep);
  const auto rows = run_e_sweep(spec);
  const auto p = temp_path("persist.csv");
  write_results(rows, p);
  EXPECT_EQ(summaries_to_csv(summarize(read_results(p))), summaries_to_csv(summarize(rows)));
}

TEST(Csv, RerunIsByteIdentical) {
  ExperimentSpec spec = small_spec(ExperimentKind::e_sweep);
  EXPECT_EQ(rows_to_csv(run_e_sweep(spec)), rows_to_csv(run_e_sweep(spec)));
}

TEST(Csv, ErrorsCarryPathContext) {
  const auto p = temp_path("bad.csv");
  {
    std::ofstream out(p);
    out << kRowsHeader << "\nexp,1,qavg,x,,0,m,1\n";
  }
  try {
    read_results(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(p.string() + ":2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(read_results(temp_path("missing_dir") / "none.csv"), Error);
  EXPECT_THROW(write_results(std::vector<ResultRow>{}, "/proc/fedmdp_no/such.csv"), Error);
}
