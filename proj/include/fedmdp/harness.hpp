#pragma once

#include "fedmdp/checks.hpp"
#include "fedmdp/fed_algo.hpp"
#include "fedmdp/fed_env.hpp"
#include "fedmdp/mdp.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace fedmdp {

enum class ExperimentKind { kappa_sweep, e_sweep, generalization, baseline_compare, theorem_checks };

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kappa_sweep: return "kappa_sweep";
    case ExperimentKind::e_sweep: return "e_sweep";
    case ExperimentKind::generalization: return "generalization";
    case ExperimentKind::baseline_compare: return "baseline_compare";
    case ExperimentKind::theorem_checks: return "theorem_checks";
  }
  return "?";
}

inline ExperimentKind experiment_kind_from_string(std::string_view s) {
  for (auto k : {ExperimentKind::kappa_sweep, ExperimentKind::e_sweep, ExperimentKind::generalization,
                 ExperimentKind::baseline_compare, ExperimentKind::theorem_checks}) {
    if (to_string(k) == s) return k;
  }
  throw InvalidArgument("unknown experiment kind '" + std::string(s) + "'");
}

enum class FamilyKind { random, windy_cliff };

/// A distribution over environments sharing one reward table.
struct EnvFamily {
  FamilyKind kind = FamilyKind::random;
  std::size_t num_states = 8;
  std::size_t num_actions = 4;
  TransitionMode mode = TransitionMode::bernoulli;
  double gamma = 0.9;
  double theta_low = 0.0;
  double theta_high = 1.0;

  /// `count` environments from substream family `tag` of `seed`. Random
  /// family: shared rewards from the seed, transitions from (tag, k).
  /// WindyCliff: wind intensities from (tag, k).
  std::vector<TabularMdp> draw(std::uint64_t seed, std::string_view tag, std::size_t count) const {
    std::vector<TabularMdp> envs;
    envs.reserve(count);
    if (kind == FamilyKind::random) {
      detail::check_sizes(num_states, num_actions, gamma);
      const Matrix reward = detail::random_rewards(seed, num_states, num_actions);
      for (std::size_t k = 0; k < count; ++k) {
        Rng rng(seed, tag, k);
        envs.emplace_back(reward, detail::random_transitions(rng, num_states, num_actions, mode), gamma);
      }
    } else {
      for (std::size_t k = 0; k < count; ++k) envs.push_back(make_windy_cliff(draw_wind(seed, tag, k, theta_low, theta_high), gamma));
    }
    return envs;
  }

  std::string_view training_tag() const { return kind == FamilyKind::random ? "transition" : "wind"; }
  std::string_view novel_tag() const { return kind == FamilyKind::random ? "novel_transition" : "novel_wind"; }

  StateDistribution default_d0() const {
    return kind == FamilyKind::random ? StateDistribution::uniform(num_states)
                                      : StateDistribution::point_mass(windy_cliff::kNumStates, windy_cliff::kStart);
  }
};

enum class EvalD0 { task, uniform };

struct ExperimentSpec {
  std::string id;
  ExperimentKind kind = ExperimentKind::kappa_sweep;
  EnvFamily family;
  std::vector<Algorithm> algorithms{Algorithm::qavg};
  std::vector<CommPeriod> E_list{CommPeriod(4)};
  std::vector<double> kappa_list;
  std::size_t n = 5;
  int num_task_seeds = 500;
  std::uint64_t seed = 0;
  /// Per-algorithm horizons; unset entries use FedConfig::defaults.
  std::map<Algorithm, int> T;
  /// Per-algorithm schedules; unset entries use ScheduleSpec::default_for.
  std::map<Algorithm, ScheduleSpec> schedule;
  int record_every = 100;
  EvalD0 eval_d0 = EvalD0::task;
  int novel_env_count = 20;
  bool include_baseline = false;
  std::string output_dir;

  std::string experiment_id() const { return id.empty() ? std::string(to_string(kind)) : id; }

  FedConfig config_for(Algorithm a, CommPeriod E) const {
    FedConfig c = FedConfig::defaults(a);
    c.local_updates_E = E;
    if (auto it = T.find(a); it != T.end()) c.total_iters_T = it->second;
    if (auto it = schedule.find(a); it != schedule.end()) c.schedule = it->second;
    c.record_every = record_every;
    return c;
  }

  StateDistribution evaluation_d0() const {
    return eval_d0 == EvalD0::uniform
               ? StateDistribution::uniform(family.kind == FamilyKind::random ? family.num_states : windy_cliff::kNumStates)
               : family.default_d0();
  }

  void validate() const {
    detail::require(num_task_seeds >= 1, "num_task_seeds must be at least 1");
    detail::require(n >= 1, "n must be at least 1");
    detail::require(record_every >= 1, "record_every must be at least 1");
    if (kind == ExperimentKind::theorem_checks) return;
    detail::require(!algorithms.empty(), "algorithms must be non-empty");
    detail::require(!E_list.empty(), "E_list must be non-empty");
    for (CommPeriod e : E_list) detail::require(e.is_infinite() || e.value() >= 1, "E values must be >= 1 or inf");
    for (double k : kappa_list) detail::require(k >= 0.0 && k <= 1.0, "kappa values must lie in [0, 1]");
    if (kind == ExperimentKind::kappa_sweep) detail::require(!kappa_list.empty(), "kappa_sweep needs a kappa_list");
    if (kind == ExperimentKind::generalization) detail::require(novel_env_count >= 1, "novel_env_count must be >= 1");
    for (const auto& [a, t] : T) detail::require(t >= 1, "T must be at least 1");
  }
};

/// One measured value. Empty E / kappa mean "not applicable".
struct ResultRow {
  std::string experiment;
  std::uint64_t task_seed = 0;
  std::string algorithm;
  std::optional<CommPeriod> E;
  std::optional<double> kappa;
  int iter = 0;
  std::string metric;
  double value = 0.0;

  auto key() const { return std::tie(experiment, task_seed, algorithm, E, kappa, iter, metric); }
  friend bool operator==(const ResultRow& a, const ResultRow& b) {
    return a.key() == b.key() && (a.value == b.value || (std::isnan(a.value) && std::isnan(b.value)));
  }
};

struct Summary {
  std::string experiment;
  std::string algorithm;
  std::optional<CommPeriod> E;
  std::optional<double> kappa;
  std::string metric;
  double mean = 0.0;
  double stderr_ = 0.0;
  int count = 0;
};

inline void sort_rows(std::vector<ResultRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) { return a.key() < b.key(); });
}

namespace detail {

inline std::string baseline_name(Algorithm a) { return std::string(to_string(a)) + "_baseline"; }

struct RowSink {
  const ExperimentSpec& spec;
  std::uint64_t seed;
  std::vector<ResultRow> rows;

  void add(std::string algorithm, std::optional<CommPeriod> E, std::optional<double> kappa, int iter,
           std::string metric, double value) {
    rows.push_back({spec.experiment_id(), seed, std::move(algorithm), E, kappa, iter, std::move(metric), value});
  }

  void add_trace(const std::string& algorithm, std::optional<CommPeriod> E, std::optional<double> kappa,
                 const TrainTrace& trace, bool with_gap) {
    for (const TraceRecord& r : trace.records) {
      add(algorithm, E, kappa, r.iter, "objective", r.objective);
      if (with_gap && std::isfinite(r.q_gap)) add(algorithm, E, kappa, r.iter, "q_gap", r.q_gap);
      if (with_gap && std::isfinite(r.grad_map_norm)) add(algorithm, E, kappa, r.iter, "grad_map_norm", r.grad_map_norm);
    }
  }
};

/// Training tasks for one seed: one per kappa, or a single plain task when
/// kappa_list is empty. Interpolated tasks use env 0 of the draw as P_0.
struct SeedTasks {
  std::vector<TabularMdp> draws;
  std::vector<std::pair<std::optional<double>, FederatedTask>> tasks;
};

inline SeedTasks seed_tasks(const ExperimentSpec& spec, std::uint64_t seed) {
  SeedTasks st;
  const StateDistribution d0 = spec.family.default_d0();
  if (spec.kappa_list.empty()) {
    st.draws = spec.family.draw(seed, spec.family.training_tag(), spec.n);
    st.tasks.emplace_back(std::nullopt, FederatedTask(st.draws, d0));
  } else {
    st.draws = spec.family.draw(seed, spec.family.training_tag(), spec.n + 1);
    const std::vector<TabularMdp> noises(st.draws.begin() + 1, st.draws.end());
    for (double kappa : spec.kappa_list) st.tasks.emplace_back(kappa, interpolate_task(st.draws.front(), noises, kappa, d0));
  }
  return st;
}

/// M novel environments, interpolated toward P_0 with the same kappa when applicable.
inline std::vector<TabularMdp> novel_envs(const ExperimentSpec& spec, std::uint64_t seed, const SeedTasks& st,
                                          std::optional<double> kappa) {
  std::vector<TabularMdp> fresh =
      spec.family.draw(seed, spec.family.novel_tag(), static_cast<std::size_t>(spec.novel_env_count));
  if (!kappa) return fresh;
  return interpolate_task(st.draws.front(), fresh, *kappa).envs();
}

inline double mean_value_on(const std::vector<TabularMdp>& envs, const StochasticPolicy& pi, const StateDistribution& d0) {
  double total = 0.0;
  for (const TabularMdp& e : envs) total += value_at(e, pi, d0);
  return total / static_cast<double>(envs.size());
}

inline std::vector<ResultRow> kappa_sweep_seed(const ExperimentSpec& spec, std::uint64_t seed) {
  RowSink sink{spec, seed, {}};
  const SeedTasks st = seed_tasks(spec, seed);
  const TabularMdp& base = st.draws.front();
  const StateDistribution eval_d0 = spec.evaluation_d0();
  for (const auto& [kappa, task] : st.tasks) {
    sink.add("task", std::nullopt, kappa, 0, "kappa1", fedmdp::kappa1(task));
    for (Algorithm a : spec.algorithms) {
      for (CommPeriod E : spec.E_list) {
        const FedConfig c = spec.config_for(a, E);
        const TrainTrace trace = federated_train(task, c);
        sink.add(std::string(to_string(a)), E, kappa, c.total_iters_T, "p0_value",
                 value_at(base, policy_of(trace.final_model), eval_d0));
      }
    }
  }
  return std::move(sink.rows);
}

inline std::vector<ResultRow> e_sweep_seed(const ExperimentSpec& spec, std::uint64_t seed) {
  RowSink sink{spec, seed, {}};
  const SeedTasks st = seed_tasks(spec, seed);
  for (const auto& [kappa, task] : st.tasks) {
    for (Algorithm a : spec.algorithms) {
      for (CommPeriod E : spec.E_list) {
        sink.add_trace(std::string(to_string(a)), E, kappa, federated_train(task, spec.config_for(a, E)), true);
      }
    }
  }
  return std::move(sink.rows);
}

inline std::vector<ResultRow> generalization_seed(const ExperimentSpec& spec, std::uint64_t seed) {
  RowSink sink{spec, seed, {}};
  const SeedTasks st = seed_tasks(spec, seed);
  const StateDistribution eval_d0 = spec.evaluation_d0();
  for (const auto& [kappa, task] : st.tasks) {
    const std::vector<TabularMdp> novel = novel_envs(spec, seed, st, kappa);
    auto emit = [&](const std::string& name, std::optional<CommPeriod> E, int iter, const std::vector<Model>& models) {
      std::vector<StochasticPolicy> policies;
      for (const Model& m : models) policies.push_back(policy_of(m));
      double total = 0.0;
      for (std::size_t m = 0; m < novel.size(); ++m) {
        double v = 0.0;
        for (const StochasticPolicy& pi : policies) v += value_at(novel[m], pi, eval_d0);
        v /= static_cast<double>(policies.size());
        sink.add(name, E, kappa, iter, "novel_env_" + std::to_string(m), v);
        total += v;
      }
      sink.add(name, E, kappa, iter, "generalization", total / static_cast<double>(novel.size()));
    };
    for (Algorithm a : spec.algorithms) {
      for (CommPeriod E : spec.E_list) {
        const FedConfig c = spec.config_for(a, E);
        emit(std::string(to_string(a)), E, c.total_iters_T, {federated_train(task, c).final_model});
      }
      if (spec.include_baseline) {
        const FedConfig c = spec.config_for(a, CommPeriod::infinity());
        emit(baseline_name(a), CommPeriod::infinity(), c.total_iters_T, independent_baseline(task, c).agent_models);
      }
    }
  }
  return std::move(sink.rows);
}

inline std::vector<ResultRow> baseline_compare_seed(const ExperimentSpec& spec, std::uint64_t seed) {
  RowSink sink{spec, seed, {}};
  const SeedTasks st = seed_tasks(spec, seed);
  for (const auto& [kappa, task] : st.tasks) {
    for (Algorithm a : spec.algorithms) {
      for (CommPeriod E : spec.E_list) {
        sink.add_trace(std::string(to_string(a)), E, kappa, federated_train(task, spec.config_for(a, E)), false);
      }
      sink.add_trace(baseline_name(a), CommPeriod::infinity(), kappa,
                     independent_baseline(task, spec.config_for(a, CommPeriod::infinity())), false);
    }
  }
  return std::move(sink.rows);
}

/// Runs `per_seed` for every task seed on up to `workers` threads. Rows are
/// buffered per seed and merged in seed order, then sorted by key.
template <typename PerSeed>
std::vector<ResultRow> run_seeds(const ExperimentSpec& spec, int workers, PerSeed per_seed) {
  spec.validate();
  const auto count = static_cast<std::size_t>(spec.num_task_seeds);
  std::vector<std::vector<ResultRow>> buffers(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        buffers[i] = per_seed(spec, spec.seed + i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(workers, static_cast<int>(count)));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<ResultRow> rows;
  for (auto& b : buffers) rows.insert(rows.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
  sort_rows(rows);
  return rows;
}

inline void require_kind(const ExperimentSpec& spec, ExperimentKind want) {
  if (spec.kind != want) {
    throw InvalidArgument("experiment kind '" + std::string(to_string(spec.kind)) + "' passed to the " +
                          std::string(to_string(want)) + " runner");
  }
}

}  // namespace detail

/// Per seed: interpolated tasks per kappa, each algorithm trained and its
/// converged policy evaluated on the noiseless P_0 environment.
inline std::vector<ResultRow> run_kappa_sweep(const ExperimentSpec& spec, int workers = 1) {
  detail::require_kind(spec, ExperimentKind::kappa_sweep);
  return detail::run_seeds(spec, workers, detail::kappa_sweep_seed);
}

/// Per seed and E: objective (and QAvg gap) traces; the row at iter = T is the converged value.
inline std::vector<ResultRow> run_e_sweep(const ExperimentSpec& spec, int workers = 1) {
  detail::require_kind(spec, ExperimentKind::e_sweep);
  return detail::run_seeds(spec, workers, detail::e_sweep_seed);
}

/// Converged policies evaluated on M freshly drawn environments.
inline std::vector<ResultRow> run_generalization(const ExperimentSpec& spec, int workers = 1) {
  detail::require_kind(spec, ExperimentKind::generalization);
  return detail::run_seeds(spec, workers, detail::generalization_seed);
}

/// Federated runs next to the no-communication baseline.
inline std::vector<ResultRow> run_baseline_compare(const ExperimentSpec& spec, int workers = 1) {
  detail::require_kind(spec, ExperimentKind::baseline_compare);
  return detail::run_seeds(spec, workers, detail::baseline_compare_seed);
}

/// Every property suite, seeded with spec.seed; one pass and one slack row per property.
inline std::vector<ResultRow> run_theorem_checks(const ExperimentSpec& spec) {
  detail::require_kind(spec, ExperimentKind::theorem_checks);
  std::vector<ResultRow> rows;
  for (const checks::PropertyResult& r : checks::run_suite("all", spec.seed)) {
    rows.push_back({spec.experiment_id(), spec.seed, "check", std::nullopt, std::nullopt, 0, r.name + ".pass",
                    r.passed ? 1.0 : 0.0});
    rows.push_back({spec.experiment_id(), spec.seed, "check", std::nullopt, std::nullopt, 0, r.name + ".slack",
                    r.worst_slack});
  }
  sort_rows(rows);
  return rows;
}

inline std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, int workers = 1) {
  switch (spec.kind) {
    case ExperimentKind::kappa_sweep: return run_kappa_sweep(spec, workers);
    case ExperimentKind::e_sweep: return run_e_sweep(spec, workers);
    case ExperimentKind::generalization: return run_generalization(spec, workers);
    case ExperimentKind::baseline_compare: return run_baseline_compare(spec, workers);
    case ExperimentKind::theorem_checks: return run_theorem_checks(spec);
  }
  throw InvalidArgument("unknown experiment kind");
}

/// Mean and standard error per (experiment, algorithm, E, kappa, metric),
/// taken over seeds at each seed's final iteration.
inline std::vector<Summary> summarize(const std::vector<ResultRow>& rows) {
  detail::require(!rows.empty(), "cannot summarize an empty row set");
  using SeedKey = std::tuple<std::string, std::uint64_t, std::string, std::optional<CommPeriod>, std::optional<double>, std::string>;
  std::map<SeedKey, const ResultRow*> final_rows;
  for (const ResultRow& r : rows) {
    SeedKey k{r.experiment, r.task_seed, r.algorithm, r.E, r.kappa, r.metric};
    auto [it, inserted] = final_rows.emplace(k, &r);
    if (!inserted && r.iter > it->second->iter) it->second = &r;
  }
  using GroupKey = std::tuple<std::string, std::string, std::optional<CommPeriod>, std::optional<double>, std::string>;
  std::map<GroupKey, std::vector<double>> groups;
  // map iteration is ordered by seed within a group, so sums are order-independent of the input
  for (const auto& [k, r] : final_rows) {
    groups[{std::get<0>(k), std::get<2>(k), std::get<3>(k), std::get<4>(k), std::get<5>(k)}].push_back(r->value);
  }
  std::vector<Summary> out;
  for (const auto& [k, values] : groups) {
    const double count = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= count;
    double se = 0.0;
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      se = std::sqrt(ss / (count - 1.0)) / std::sqrt(count);
    }
    out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k), std::get<4>(k), mean, se,
                   static_cast<int>(values.size())});
  }
  return out;
}

// ---- CSV persistence ------------------------------------------------------

inline constexpr std::string_view kRowsHeader = "experiment,task_seed,algorithm,E,kappa,iter,metric,value";
inline constexpr std::string_view kSummaryHeader = "experiment,algorithm,E,kappa,metric,mean,stderr,count";

/// 17 significant digits: parses back to the identical double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw InvalidArgument("invalid number '" + s + "'");
  return v;
}

namespace detail {

inline std::string format_optional(const std::optional<CommPeriod>& e) { return e ? e->to_string() : ""; }
inline std::string format_optional(const std::optional<double>& k) { return k ? format_double(*k) : ""; }

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline void check_name(const std::string& s) {
  if (s.find_first_of(",\n\r\"") != std::string::npos) throw InvalidArgument("CSV field contains a delimiter: '" + s + "'");
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing: " + std::strerror(errno));
  out << text;
  out.close();
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace detail

inline std::string rows_to_csv(std::vector<ResultRow> rows) {
  sort_rows(rows);
  std::ostringstream os;
  os << kRowsHeader << '\n';
  for (const ResultRow& r : rows) {
    detail::check_name(r.experiment);
    detail::check_name(r.algorithm);
    detail::check_name(r.metric);
    os << r.experiment << ',' << r.task_seed << ',' << r.algorithm << ',' << detail::format_optional(r.E) << ','
       << detail::format_optional(r.kappa) << ',' << r.iter << ',' << r.metric << ',' << format_double(r.value) << '\n';
  }
  return os.str();
}

inline std::string summaries_to_csv(const std::vector<Summary>& summaries) {
  std::ostringstream os;
  os << kSummaryHeader << '\n';
  for (const Summary& s : summaries) {
    os << s.experiment << ',' << s.algorithm << ',' << detail::format_optional(s.E) << ','
       << detail::format_optional(s.kappa) << ',' << s.metric << ',' << format_double(s.mean) << ','
       << format_double(s.stderr_) << ',' << s.count << '\n';
  }
  return os.str();
}

inline void write_results(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
  detail::write_text(path, rows_to_csv(rows));
}

inline void write_results(const std::vector<Summary>& summaries, const std::filesystem::path& path) {
  detail::write_text(path, summaries_to_csv(summaries));
}

/// Parses a rows CSV; throws Error with path and line context on malformed input.
inline std::vector<ResultRow> read_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string() + ": " + std::strerror(errno));
  std::string line;
  if (!std::getline(in, line) || (line != kRowsHeader && line != std::string(kRowsHeader) + "\r")) {
    throw Error(path.string() + ": missing or unexpected header");
  }
  std::vector<ResultRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    try {
      if (f.size() != 8) throw InvalidArgument("expected 8 fields, got " + std::to_string(f.size()));
      ResultRow r;
      r.experiment = f[0];
      r.task_seed = std::stoull(f[1]);
      r.algorithm = f[2];
      if (!f[3].empty()) r.E = CommPeriod::parse(f[3]);
      if (!f[4].empty()) r.kappa = parse_double(f[4]);
      r.iter = std::stoi(f[5]);
      r.metric = f[6];
      r.value = parse_double(f[7]);
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace fedmdp
