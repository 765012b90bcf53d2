#pragma once

#include "fedmdp/fed_env.hpp"
#include "fedmdp/mdp.hpp"
#include "fedmdp/types.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fedmdp {

enum class Algorithm { qavg, projpavg, softpavg };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::qavg: return "qavg";
    case Algorithm::projpavg: return "projpavg";
    case Algorithm::softpavg: return "softpavg";
  }
  return "?";
}

inline Algorithm algorithm_from_string(std::string_view s) {
  if (s == "qavg") return Algorithm::qavg;
  if (s == "projpavg") return Algorithm::projpavg;
  if (s == "softpavg") return Algorithm::softpavg;
  throw InvalidArgument("unknown algorithm '" + std::string(s) + "'");
}

/// Number of local updates between aggregations; may be infinite.
class CommPeriod {
 public:
  constexpr CommPeriod() = default;
  explicit constexpr CommPeriod(int e) : value_(e) {}
  static constexpr CommPeriod infinity() { return CommPeriod(kInfinite); }

  constexpr bool is_infinite() const { return value_ == kInfinite; }
  constexpr int value() const { return value_; }

  /// Period used inside step-size formulas: infinity behaves like a single
  /// aggregation at the horizon, i.e. E = T.
  constexpr int effective(int horizon) const { return is_infinite() ? horizon : value_; }

  std::string to_string() const { return is_infinite() ? "inf" : std::to_string(value_); }
  static CommPeriod parse(std::string_view s) {
    if (s == "inf") return infinity();
    try {
      std::size_t used = 0;
      const int v = std::stoi(std::string(s), &used);
      if (used == s.size() && v >= 1) return CommPeriod(v);
    } catch (const std::exception&) {
    }
    throw InvalidArgument("invalid communication period '" + std::string(s) + "'");
  }

  friend constexpr auto operator<=>(CommPeriod, CommPeriod) = default;

 private:
  static constexpr int kInfinite = std::numeric_limits<int>::max();
  int value_ = 1;
};

enum class ScheduleKind { qavg_theoretical, pavg_theoretical, constant };

inline std::string_view to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::qavg_theoretical: return "qavg_theoretical";
    case ScheduleKind::pavg_theoretical: return "pavg_theoretical";
    case ScheduleKind::constant: return "constant";
  }
  return "?";
}

inline ScheduleKind schedule_kind_from_string(std::string_view s) {
  if (s == "qavg_theoretical") return ScheduleKind::qavg_theoretical;
  if (s == "pavg_theoretical") return ScheduleKind::pavg_theoretical;
  if (s == "constant") return ScheduleKind::constant;
  throw InvalidArgument("unknown schedule kind '" + std::string(s) + "'");
}

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::constant;
  std::optional<double> eta_constant;
  std::optional<double> smoothness_L;

  static ScheduleSpec qavg_theoretical() { return {ScheduleKind::qavg_theoretical, {}, {}}; }
  static ScheduleSpec pavg_theoretical(double L) { return {ScheduleKind::pavg_theoretical, {}, L}; }
  static ScheduleSpec constant(double eta) { return {ScheduleKind::constant, eta, {}}; }

  /// qavg: theoretical; projpavg: constant 0.1; softpavg: constant 0.5.
  static ScheduleSpec default_for(Algorithm a) {
    switch (a) {
      case Algorithm::qavg: return qavg_theoretical();
      case Algorithm::projpavg: return constant(0.1);
      case Algorithm::softpavg: return constant(0.5);
    }
    return constant(0.1);
  }
};

/// Step size at iteration t.
///   qavg_theoretical: 2 / ((1 - gamma)(t + E))
///   pavg_theoretical: sqrt(E / (12 L^2 (t + E/3)))
inline double lr_schedule(const ScheduleSpec& spec, int t, int E, double gamma) {
  detail::require(t >= 0, "iteration index must be non-negative");
  detail::require(E >= 1, "communication period must be at least 1");
  switch (spec.kind) {
    case ScheduleKind::qavg_theoretical:
      return 2.0 / ((1.0 - gamma) * (static_cast<double>(t) + E));
    case ScheduleKind::pavg_theoretical: {
      detail::require(spec.smoothness_L.has_value() && *spec.smoothness_L > 0.0,
                      "pavg_theoretical schedule requires a positive smoothness_L");
      const double L = *spec.smoothness_L;
      return std::sqrt(E / (12.0 * L * L * (static_cast<double>(t) + E / 3.0)));
    }
    case ScheduleKind::constant:
      detail::require(spec.eta_constant.has_value() && *spec.eta_constant > 0.0,
                      "constant schedule requires a positive eta_constant");
      return *spec.eta_constant;
  }
  throw InvalidArgument("unknown schedule kind");
}

enum class Init { zeros, uniform };

struct FedConfig {
  Algorithm algorithm = Algorithm::qavg;
  CommPeriod local_updates_E{1};
  int total_iters_T = 1000;
  ScheduleSpec schedule = ScheduleSpec::qavg_theoretical();
  /// zeros for Q tables and logits, uniform for projected policies.
  Init init = Init::zeros;
  std::uint64_t seed = 0;
  int record_every = 1;

  static FedConfig defaults(Algorithm a) {
    FedConfig c;
    c.algorithm = a;
    c.schedule = ScheduleSpec::default_for(a);
    c.init = a == Algorithm::projpavg ? Init::uniform : Init::zeros;
    c.total_iters_T = a == Algorithm::qavg ? 5000 : 2000;
    return c;
  }

  void validate() const {
    detail::require(total_iters_T >= 1, "T must be at least 1");
    detail::require(local_updates_E.is_infinite() || local_updates_E.value() >= 1, "E must be at least 1");
    detail::require(record_every >= 1, "record_every must be at least 1");
    detail::require(algorithm == Algorithm::projpavg ? init == Init::uniform : init == Init::zeros,
                    "init must be 'uniform' for projpavg and 'zeros' for qavg/softpavg");
  }
};

using Model = std::variant<QTable, StochasticPolicy, LogitTable>;

/// Policy used for control: greedy for Q tables, softmax for logits.
inline StochasticPolicy policy_of(const Model& m) {
  if (const auto* q = std::get_if<QTable>(&m)) return greedy_policy(*q);
  if (const auto* l = std::get_if<LogitTable>(&m)) return softmax_policy(*l);
  return std::get<StochasticPolicy>(m);
}

struct TraceRecord {
  int iter = 0;
  /// g_{d0} of the aggregate (or, for the independent baseline, the mean over agents).
  double objective = 0.0;
  /// ||Qbar_t - Q*_I||_inf; NaN for policy algorithms.
  double q_gap = std::numeric_limits<double>::quiet_NaN();
  /// ||G^eta(pibar_t)||_2; NaN for QAvg.
  double grad_map_norm = std::numeric_limits<double>::quiet_NaN();
  bool aggregated = false;
};

struct TrainTrace {
  std::vector<TraceRecord> records;
  /// The aggregated model after the final round. For the independent
  /// baseline this is the plain average of the local models (the E = inf model).
  Model final_model;
  std::vector<Model> agent_models;
};

/// g_{d0}(pi) = (1/n) sum_i E_{d0}[V_i^pi(s)].
inline double federated_objective(const FederatedTask& task, const StochasticPolicy& policy) {
  double total = 0.0;
  for (const TabularMdp& env : task.envs()) total += value_at(env, policy, task.d0());
  return total / static_cast<double>(task.size());
}

/// Norm of (Proj(pi + eta * mean_k grad_k) - pi) / eta over all (s,a).
inline double gradient_mapping_norm(const FederatedTask& task, const StochasticPolicy& policy, double eta) {
  detail::require(eta > 0.0, "eta must be positive");
  Matrix mean = Matrix::Zero(policy.probs().rows(), policy.probs().cols());
  for (const TabularMdp& env : task.envs()) mean += exact_policy_gradient(env, policy, task.d0());
  mean /= static_cast<double>(task.size());
  const Matrix stepped = project_rows_to_simplex(policy.probs() + eta * mean);
  return ((stepped - policy.probs()) / eta).norm();
}

namespace detail {

inline Matrix& params(Model& m) {
  if (auto* q = std::get_if<QTable>(&m)) return q->values;
  if (auto* l = std::get_if<LogitTable>(&m)) return l->logits;
  throw InvalidArgument("policy models are not mutable through params()");
}

/// Averages models in agent-index order.
inline Model average_models(const std::vector<Model>& models) {
  const double n = static_cast<double>(models.size());
  return std::visit(
      [&](const auto& first) -> Model {
        using T = std::decay_t<decltype(first)>;
        if constexpr (std::is_same_v<T, StochasticPolicy>) {
          Matrix sum = first.probs();
          for (std::size_t k = 1; k < models.size(); ++k) sum += std::get<StochasticPolicy>(models[k]).probs();
          return StochasticPolicy(sum / n);
        } else if constexpr (std::is_same_v<T, QTable>) {
          Matrix sum = first.values;
          for (std::size_t k = 1; k < models.size(); ++k) sum += std::get<QTable>(models[k]).values;
          return QTable(sum / n);
        } else {
          Matrix sum = first.logits;
          for (std::size_t k = 1; k < models.size(); ++k) sum += std::get<LogitTable>(models[k]).logits;
          return LogitTable(sum / n);
        }
      },
      models.front());
}

inline Model initial_model(const FedConfig& config, std::size_t num_states, std::size_t num_actions) {
  switch (config.algorithm) {
    case Algorithm::qavg: return QTable::zeros(num_states, num_actions);
    case Algorithm::projpavg: return StochasticPolicy::uniform(num_states, num_actions);
    case Algorithm::softpavg: return LogitTable::zeros(num_states, num_actions);
  }
  throw InvalidArgument("unknown algorithm");
}

/// One local update of agent model `m` in environment `env` with step `eta`.
///
/// The damped Q update is applied with step min(eta, 1): it is a convex
/// combination of Q and TQ only for steps up to 1, and the theoretical
/// schedule exceeds 1 for t + E < 2 / (1 - gamma).
inline void local_update(Model& m, const TabularMdp& env, const StateDistribution& d0, double eta) {
  if (auto* q = std::get_if<QTable>(&m)) {
    const double step = std::min(eta, 1.0);
    const QTable target = bellman_optimality(env, *q);
    q->values = (1.0 - step) * q->values + step * target.values;
  } else if (auto* pi = std::get_if<StochasticPolicy>(&m)) {
    const Matrix grad = exact_policy_gradient(env, *pi, d0);
    *pi = StochasticPolicy(project_rows_to_simplex(pi->probs() + eta * grad));
  } else {
    auto& logits = std::get<LogitTable>(m);
    logits.logits += eta * softmax_gradient(env, logits, d0);
  }
}

inline StochasticPolicy mean_policy_of(const std::vector<Model>& models) { return policy_of(average_models(models)); }

class Trainer {
 public:
  Trainer(const FederatedTask& task, const FedConfig& config, bool federated)
      : task_(task), config_(config), federated_(federated) {
    config_.validate();
    if (config_.algorithm == Algorithm::qavg) {
      q_star_ = q_value_iteration(imaginary_mdp(task_), 1e-10).values;
    }
  }

  TrainTrace run() {
    const std::size_t n = task_.size();
    std::vector<Model> agents(n, initial_model(config_, task_.num_states(), task_.num_actions()));
    const int horizon = config_.total_iters_T;
    const int period = config_.local_updates_E.effective(horizon);

    TrainTrace trace;
    record(trace, agents, 0, lr_schedule(config_.schedule, 0, period, task_.gamma()), false);
    for (int t = 0; t < horizon; ++t) {
      const double eta = lr_schedule(config_.schedule, t, period, task_.gamma());
      for (std::size_t k = 0; k < n; ++k) local_update(agents[k], task_.env(k), task_.d0(), eta);
      const int round = t + 1;
      const bool aggregate =
          federated_ && (round == horizon || (!config_.local_updates_E.is_infinite() && round % period == 0));
      if (aggregate) {
        const Model mean = average_models(agents);
        for (Model& a : agents) a = mean;
      }
      if (round % config_.record_every == 0 || round == horizon) {
        record(trace, agents, round, lr_schedule(config_.schedule, round, period, task_.gamma()), aggregate);
      }
    }
    trace.final_model = average_models(agents);
    trace.agent_models = std::move(agents);
    return trace;
  }

 private:
  void record(TrainTrace& trace, const std::vector<Model>& agents, int iter, double eta, bool aggregated) const {
    TraceRecord r;
    r.iter = iter;
    r.aggregated = aggregated;
    if (federated_) {
      const Model mean = average_models(agents);
      const StochasticPolicy pi = policy_of(mean);
      r.objective = federated_objective(task_, pi);
      if (q_star_) {
        r.q_gap = (std::get<QTable>(mean).values - *q_star_).lpNorm<Eigen::Infinity>();
      } else {
        r.grad_map_norm = gradient_mapping_norm(task_, pi, eta);
      }
    } else {
      // Baseline: step-wise average over agents of each local model's metric.
      const double n = static_cast<double>(agents.size());
      double objective = 0.0, gap = 0.0, gmap = 0.0;
      for (const Model& m : agents) {
        const StochasticPolicy pi = policy_of(m);
        objective += federated_objective(task_, pi);
        if (q_star_) {
          gap += (std::get<QTable>(m).values - *q_star_).lpNorm<Eigen::Infinity>();
        } else {
          gmap += gradient_mapping_norm(task_, pi, eta);
        }
      }
      r.objective = objective / n;
      if (q_star_) {
        r.q_gap = gap / n;
      } else {
        r.grad_map_norm = gmap / n;
      }
    }
    trace.records.push_back(r);
  }

  const FederatedTask& task_;
  FedConfig config_;
  bool federated_;
  std::optional<Matrix> q_star_;
};

inline void require_algorithm(const FedConfig& config, bool want_qavg) {
  const bool is_qavg = config.algorithm == Algorithm::qavg;
  if (is_qavg != want_qavg) {
    throw InvalidArgument(std::string("algorithm '") + std::string(to_string(config.algorithm)) +
                          "' is not handled by " + (want_qavg ? "qavg_train" : "pavg_train"));
  }
}

}  // namespace detail

/// Federated Q-iteration: local damped Bellman updates on each agent's own
/// model, averaging every E rounds and once more at round T.
inline TrainTrace qavg_train(const FederatedTask& task, const FedConfig& config) {
  detail::require_algorithm(config, true);
  return detail::Trainer(task, config, true).run();
}

/// Federated policy gradient: projected ascent on the policy table
/// (projpavg) or plain ascent on logits (softpavg), averaging parameters.
inline TrainTrace pavg_train(const FederatedTask& task, const FedConfig& config) {
  detail::require_algorithm(config, false);
  return detail::Trainer(task, config, true).run();
}

/// Dispatches on config.algorithm.
inline TrainTrace federated_train(const FederatedTask& task, const FedConfig& config) {
  return config.algorithm == Algorithm::qavg ? qavg_train(task, config) : pavg_train(task, config);
}

/// Same local updates with no communication. The recorded objective is the
/// mean over agents of each local model's federated objective.
inline TrainTrace independent_baseline(const FederatedTask& task, const FedConfig& config) {
  return detail::Trainer(task, config, false).run();
}

}  // namespace fedmdp
