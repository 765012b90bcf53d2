// Acceptance run: one PASS/FAIL line per criterion.
//
// Exit status is 0 when the set of failing criteria equals the set given by
// --expect-fail (empty by default), 1 otherwise.

#include "fedmdp/fedmdp.hpp"
#include "oracles.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <thread>

using namespace fedmdp;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool passed;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int workers() { return std::max(1u, std::thread::hardware_concurrency()); }

Outcome qavg_bound() {
  const checks::PropertyResult r = checks::qavg_bound_suite(kSeed);
  return {r.passed, std::to_string(r.cases) + " recorded points, worst slack " + fmt("%.6g", r.worst_slack)};
}

Outcome qavg_limit_invariance() {
  constexpr int kHorizon = 50000;
  const checks::QavgBoundOptions o;
  const std::vector<int> periods{1, 2, 4, 8};
  int fails = 0, inf_differs = 0;
  double worst_pair = 0.0, worst_star = 0.0;
  for (int i = 0; i < o.num_tasks; ++i) {
    const FederatedTask task = checks::qavg_bound_task(kSeed, i, o);
    const Matrix q_star = q_value_iteration(imaginary_mdp(task), 1e-10).values;
    auto train = [&](CommPeriod E) {
      FedConfig c = FedConfig::defaults(Algorithm::qavg);
      c.local_updates_E = E;
      c.total_iters_T = kHorizon;
      c.record_every = kHorizon;
      return std::get<QTable>(qavg_train(task, c).final_model).values;
    };
    std::vector<Matrix> finals;
    for (int E : periods) finals.push_back(train(CommPeriod(E)));
    bool ok = true;
    for (std::size_t a = 0; a < finals.size(); ++a) {
      const double star = (finals[a] - q_star).lpNorm<Eigen::Infinity>();
      worst_star = std::max(worst_star, star);
      ok = ok && star <= 1e-3;
      for (std::size_t b = a + 1; b < finals.size(); ++b) {
        const double d = (finals[a] - finals[b]).lpNorm<Eigen::Infinity>();
        worst_pair = std::max(worst_pair, d);
        ok = ok && d <= 1e-3;
      }
    }
    fails += !ok;
    inf_differs += (train(CommPeriod::infinity()) - q_star).lpNorm<Eigen::Infinity>() > 1e-3;
  }
  const bool inf_ok = inf_differs >= (8 * o.num_tasks + 9) / 10;
  return {fails == 0 && inf_ok, "T=" + std::to_string(kHorizon) + ", worst pairwise " + fmt("%.3g", worst_pair) +
                                    ", worst to Q*_I " + fmt("%.3g", worst_star) + ", E=inf differs on " +
                                    std::to_string(inf_differs) + "/" + std::to_string(o.num_tasks)};
}

Outcome value_bounds() {
  const auto r = checks::lemma_suite(kSeed, 100);
  std::string d;
  for (const auto& p : r) d += p.name + (p.passed ? " pass" : " FAIL") + " (worst slack " + fmt("%.3g", p.worst_slack) + ") ";
  d.pop_back();
  return {r[0].passed && r[1].passed, d};
}

Outcome d0_dependence() {
  std::string d;
  bool ok = true;
  for (double tau : {0.0, 0.01}) {
    const FederatedTask t = make_counterexample_task(tau);
    const auto a = checks::grid_search(t, StateDistribution::point_mass(2, 0));
    const auto b = checks::grid_search(t, StateDistribution::point_mass(2, 1));
    const double gap = std::abs(a.q - b.q);
    ok = ok && gap >= 0.5;
    d += "tau=" + fmt("%g", tau) + ": q=" + fmt("%.2f", a.q) + " vs " + fmt("%.2f", b.q) + "; ";
  }
  d.resize(d.size() - 2);
  return {ok, d};
}

Outcome gradients() {
  const auto r = checks::gradient_suite(kSeed, 50, 1e-5);
  return {r[0].passed && r[1].passed, "max rel err policy " + fmt("%.3g", 1e-5 - r[0].worst_slack) + ", softmax " +
                                          fmt("%.3g", 1e-5 - r[1].worst_slack)};
}

Outcome oracle_equivalence() {
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const TabularMdp m = make_random_mdp(substream_key(kSeed, "acceptance_q", i), 4, 3,
                                         i % 2 ? TransitionMode::bernoulli : TransitionMode::dirichlet, 0.9);
    const Matrix q = q_value_iteration(m).values;
    const auto brute = oracle::optimal_q_by_enumeration(m);
    for (std::size_t s = 0; s < 4; ++s)
      for (std::size_t a = 0; a < 3; ++a)
        worst = std::max(worst, std::abs(q(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) - brute[s][a]));
  }
  return {worst <= 1e-6, "max |Q - brute force| " + fmt("%.3g", worst)};
}

Outcome kappa1_exact() {
  int mismatches = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    Rng rng(kSeed, "acceptance_kappa1", i);
    const std::size_t ns = 1 + rng.next_u64() % 4, na = 1 + rng.next_u64() % 4, n = 2 + rng.next_u64() % 4;
    const FederatedTask t = make_random_task(substream_key(kSeed, "acceptance_kappa1_task", i), n, ns, na, 0.9,
                                             i % 2 ? TransitionMode::bernoulli : TransitionMode::dirichlet);
    mismatches += kappa1(t) != oracle::kappa1_by_enumeration(t);
  }
  return {mismatches == 0, std::to_string(mismatches) + "/20 mismatches"};
}

Outcome kappa_trend() {
  ExperimentSpec s;
  s.id = "acceptance_kappa";
  s.kind = ExperimentKind::kappa_sweep;
  s.algorithms = {Algorithm::qavg, Algorithm::softpavg};
  s.E_list = {CommPeriod(4)};
  s.kappa_list = {0.0, 0.4, 0.8};
  s.num_task_seeds = 500;
  s.seed = kSeed;
  s.record_every = 1000000;
  const auto summaries = summarize(run_kappa_sweep(s, workers()));
  bool ok = true;
  std::string d;
  for (const char* algo : {"qavg", "softpavg"}) {
    std::vector<const Summary*> by_kappa;
    for (const Summary& x : summaries)
      if (x.algorithm == algo && x.metric == "p0_value") by_kappa.push_back(&x);
    if (by_kappa.size() != 3) return {false, std::string("missing summaries for ") + algo};
    d += std::string(algo) + ":";
    for (std::size_t k = 0; k < 3; ++k) d += " " + fmt("%.4f", by_kappa[k]->mean) + "+-" + fmt("%.4f", by_kappa[k]->stderr_);
    for (std::size_t k = 0; k + 1 < 3; ++k) {
      const double slack = std::max(by_kappa[k]->stderr_, by_kappa[k + 1]->stderr_);
      ok = ok && by_kappa[k + 1]->mean <= by_kappa[k]->mean + slack;
    }
    d += "; ";
  }
  d.resize(d.size() - 2);
  return {ok, d};
}

Outcome pavg_single_env() {
  double worst_gap = 0.0, worst_map = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const FederatedTask t = make_random_task(seed, 1, 4, 4, 0.9, TransitionMode::bernoulli);
    FedConfig c = FedConfig::defaults(Algorithm::projpavg);
    c.schedule = ScheduleSpec::constant(0.05);
    c.total_iters_T = 2000;
    c.record_every = 2000;
    const TrainTrace tr = pavg_train(t, c);
    const double best = value_at(t.env(0), greedy_policy(q_value_iteration(t.env(0))), t.d0());
    worst_gap = std::max(worst_gap, std::abs(tr.records.back().objective - best));
    worst_map = std::max(worst_map, gradient_mapping_norm(t, std::get<StochasticPolicy>(tr.final_model), 0.05));
  }
  return {worst_gap <= 1e-3 && worst_map < 1e-3,
          "max objective gap " + fmt("%.3g", worst_gap) + ", max gradient-mapping norm " + fmt("%.3g", worst_map)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "fedmdp_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::vector<std::string> configs = {
      R"({"id": "det_kappa", "kind": "kappa_sweep", "kappa_list": [0, 0.4, 0.8], "algorithms": ["qavg", "softpavg"],
          "E_list": [4], "T": {"qavg": 1000, "softpavg": 300}, "num_task_seeds": 8})",
      R"({"id": "det_e", "kind": "e_sweep", "algorithms": ["qavg", "projpavg"], "E_list": [1, 4, "inf"],
          "T": {"qavg": 1000, "projpavg": 300}, "num_task_seeds": 8, "record_every": 50})",
      R"({"id": "det_gen", "kind": "generalization", "family": "windy_cliff", "algorithms": ["qavg"],
          "E_list": [2], "T": 500, "num_task_seeds": 6, "novel_env_count": 5, "include_baseline": true})"};
  int mismatches = 0, failures = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const fs::path cfg = dir / ("cfg" + std::to_string(i) + ".json");
    std::ofstream(cfg) << configs[i];
    for (const char* run : {"a", "b", "c"}) {
      const std::string w = std::string(run) == "c" ? "4" : "1";
      const std::string cmd = std::string(FEDMDP_CLI_PATH) + " run " + cfg.string() + " --workers " + w + " --out " +
                              (dir / run).string() + " > /dev/null 2>&1";
      const int raw = std::system(cmd.c_str());
      failures += !(WIFEXITED(raw) && WEXITSTATUS(raw) == 0);
    }
  }
  int files = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    ++files;
    const std::string a = slurp(entry.path());
    mismatches += a != slurp(dir / "b" / entry.path().filename()) || a != slurp(dir / "c" / entry.path().filename());
  }
  return {failures == 0 && mismatches == 0 && files == 6,
          std::to_string(files) + " CSVs compared across rerun and --workers 4, " + std::to_string(mismatches) +
              " differ, " + std::to_string(failures) + " runs failed"};
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected_failures;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--expect-fail" && i + 1 < argc) {
      expected_failures = parse_list(argv[++i]);
    } else if (a == "--only" && i + 1 < argc) {
      only = parse_list(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--expect-fail N,M,...] [--only N,M,...]\n");
      return 2;
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"QAvg convergence bound", qavg_bound},
      {"QAvg limit independent of E", qavg_limit_invariance},
      {"averaged vs imaginary value bounds", value_bounds},
      {"d0-dependent optimum", d0_dependence},
      {"gradient finite differences", gradients},
      {"value iteration vs enumeration", oracle_equivalence},
      {"kappa1 vs enumeration", kappa1_exact},
      {"P0 performance vs kappa", kappa_trend},
      {"single-environment PAvg optimality", pavg_single_env},
      {"byte-identical reruns", determinism},
  };
  std::set<int> failed;
  std::ofstream report("acceptance_report.txt");
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.passed) failed.insert(id);
    char head[64];
    std::snprintf(head, sizeof head, "criterion %2d %s  ", id, o.passed ? "PASS" : "FAIL");
    const std::string line = head + criteria[i].first + ": " + o.detail + " [" + fmt("%.1f", secs) + "s]";
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    report << line << '\n';
  }
  std::set<int> expected;
  for (int id : expected_failures)
    if (only.empty() || only.count(id)) expected.insert(id);
  if (failed != expected) {
    std::printf("failing criteria differ from the expected set\n");
    return 1;
  }
  return 0;
}
