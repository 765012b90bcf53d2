#pragma once

// Numerical property suites: value-function bounds for the imaginary
// environment, the QAvg convergence bound, d0-dependence of the optimum,
// Bellman contraction, and gradient correctness.

#include "fedmdp/fed_algo.hpp"
#include "fedmdp/fed_env.hpp"
#include "fedmdp/mdp.hpp"
#include "fedmdp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace fedmdp::checks {

struct PropertyResult {
  std::string name;
  bool passed = false;
  /// Smallest margin observed; negative means violated.
  double worst_slack = std::numeric_limits<double>::infinity();
  int cases = 0;
};

inline constexpr std::string_view kSuites[] = {"lemmas", "qavg_bound", "counterexample", "contraction", "gradients"};

inline bool is_suite(std::string_view name) {
  return name == "all" || std::find(std::begin(kSuites), std::end(kSuites), name) != std::end(kSuites);
}

/// Averaged value function (1/n) sum_i V_i^pi.
inline Vector averaged_value(const FederatedTask& task, const StochasticPolicy& policy) {
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(task.num_states()));
  for (const TabularMdp& env : task.envs()) sum += policy_evaluation(env, policy).values;
  return sum / static_cast<double>(task.size());
}

/// Random small task for property checks; sizes and mode vary with `index`.
inline FederatedTask property_task(std::uint64_t seed, std::uint64_t index) {
  Rng rng(seed, "property_task", index);
  const std::size_t n = 2 + rng.next_u64() % 4;
  const std::size_t num_states = 2 + rng.next_u64() % 7;
  const std::size_t num_actions = 2 + rng.next_u64() % 3;
  const TransitionMode mode = index % 2 == 0 ? TransitionMode::dirichlet : TransitionMode::bernoulli;
  return make_random_task(substream_key(seed, "property_task_seed", index), n, num_states, num_actions, 0.9, mode);
}

/// V-bar >= V_I elementwise, and |V-bar - V_I| <= gamma kappa1 / (1-gamma)^2.
inline std::vector<PropertyResult> lemma_suite(std::uint64_t seed, int num_pairs = 100) {
  PropertyResult lower{"lemma1_lower_bound"}, gap{"lemma2_heterogeneity_bound"};
  for (int i = 0; i < num_pairs; ++i) {
    const FederatedTask task = property_task(seed, static_cast<std::uint64_t>(i));
    Rng rng(seed, "lemma_policy", static_cast<std::uint64_t>(i));
    const StochasticPolicy pi = random_interior_policy(rng, task.num_states(), task.num_actions());
    const Vector vbar = averaged_value(task, pi);
    const Vector vi = policy_evaluation(imaginary_mdp(task), pi).values;
    const double g = task.gamma();
    const double bound = g * kappa1(task) / ((1.0 - g) * (1.0 - g));
    lower.worst_slack = std::min(lower.worst_slack, (vbar - vi).minCoeff());
    gap.worst_slack = std::min(gap.worst_slack, bound - (vbar - vi).lpNorm<Eigen::Infinity>());
    ++lower.cases;
    ++gap.cases;
  }
  lower.passed = lower.worst_slack >= -1e-9;
  gap.passed = gap.worst_slack >= -1e-9;
  return {lower, gap};
}

/// Right-hand side of the QAvg bound: 16 gamma E / ((1-gamma)^3 (t+E)).
inline double qavg_bound(double gamma, int E, int t) {
  const double c = 1.0 - gamma;
  return 16.0 * gamma * E / (c * c * c * (static_cast<double>(t) + E));
}

struct QavgBoundOptions {
  int num_tasks = 20;
  std::size_t n = 5;
  std::size_t num_states = 8;
  std::size_t num_actions = 4;
  double gamma = 0.9;
  int horizon = 5000;
  std::vector<int> periods{1, 2, 4, 8};
};

/// Task `index` of the bound suite (Bernoulli transitions, rewards in [0,1]).
inline FederatedTask qavg_bound_task(std::uint64_t seed, int index, const QavgBoundOptions& o) {
  return make_random_task(substream_key(seed, "qavg_bound_task", static_cast<std::uint64_t>(index)), o.n,
                          o.num_states, o.num_actions, o.gamma, TransitionMode::bernoulli);
}

/// Checks ||Qbar_t - Q*_I||_inf against the bound at every t <= horizon.
inline PropertyResult qavg_bound_suite(std::uint64_t seed, const QavgBoundOptions& o = {}) {
  PropertyResult r{"qavg_convergence_bound"};
  for (int i = 0; i < o.num_tasks; ++i) {
    const FederatedTask task = qavg_bound_task(seed, i, o);
    for (int E : o.periods) {
      FedConfig c = FedConfig::defaults(Algorithm::qavg);
      c.local_updates_E = CommPeriod(E);
      c.total_iters_T = o.horizon;
      c.record_every = 1;
      const TrainTrace trace = qavg_train(task, c);
      for (const TraceRecord& rec : trace.records) {
        r.worst_slack = std::min(r.worst_slack, qavg_bound(task.gamma(), E, rec.iter) - rec.q_gap);
        ++r.cases;
      }
    }
  }
  r.passed = r.worst_slack >= 0.0;
  return r;
}

/// Argmax of g_{d0} over the (p, q) grid, p = pi(a0|s0), q = pi(a0|s1).
/// Ties keep the first point in (p, q) lexicographic order.
struct GridArgmax {
  double p = 0.0;
  double q = 0.0;
  double value = -std::numeric_limits<double>::infinity();
};

inline StochasticPolicy two_state_policy(double p, double q) {
  Matrix m(2, 2);
  m << p, 1.0 - p,
       q, 1.0 - q;
  return StochasticPolicy(std::move(m));
}

inline GridArgmax grid_search(const FederatedTask& task, const StateDistribution& d0, double step = 0.05) {
  const FederatedTask t = task.with_d0(d0);
  const int points = static_cast<int>(std::lround(1.0 / step));
  GridArgmax best;
  for (int i = 0; i <= points; ++i) {
    for (int j = 0; j <= points; ++j) {
      const double p = i * step, q = j * step;
      const double v = federated_objective(t, two_state_policy(std::min(p, 1.0), std::min(q, 1.0)));
      if (v > best.value) best = {p, q, v};
    }
  }
  return best;
}

/// For d0 = (1,0) and d0' = (0,1) the grid argmax differ in q by at least 0.5.
inline PropertyResult counterexample_suite(const std::vector<double>& taus = {0.0, 0.01}) {
  PropertyResult r{"d0_dependent_optimum"};
  for (double tau : taus) {
    const FederatedTask task = make_counterexample_task(tau);
    const GridArgmax a = grid_search(task, StateDistribution::point_mass(2, 0));
    const GridArgmax b = grid_search(task, StateDistribution::point_mass(2, 1));
    r.worst_slack = std::min(r.worst_slack, std::abs(a.q - b.q) - 0.5);
    ++r.cases;
  }
  r.passed = r.worst_slack >= 0.0;
  return r;
}

/// Averaged Bellman optimality operator (1/n) sum_k T_k Q.
inline QTable average_bellman(const FederatedTask& task, const QTable& q) {
  Matrix sum = Matrix::Zero(q.values.rows(), q.values.cols());
  for (const TabularMdp& env : task.envs()) sum += bellman_optimality(env, q).values;
  return QTable(sum / static_cast<double>(task.size()));
}

/// ||TQ1 - TQ2|| <= gamma ||Q1 - Q2|| for single-environment and averaged operators.
inline PropertyResult contraction_suite(std::uint64_t seed, int num_pairs = 200) {
  PropertyResult r{"bellman_contraction"};
  for (int i = 0; i < num_pairs; ++i) {
    const FederatedTask task = property_task(seed, static_cast<std::uint64_t>(1000 + i));
    Rng rng(seed, "contraction_q", static_cast<std::uint64_t>(i));
    auto random_q = [&] {
      Matrix m(static_cast<Eigen::Index>(task.num_states()), static_cast<Eigen::Index>(task.num_actions()));
      for (Eigen::Index s = 0; s < m.rows(); ++s)
        for (Eigen::Index a = 0; a < m.cols(); ++a) m(s, a) = rng.uniform(-20.0, 20.0);
      return QTable(std::move(m));
    };
    const QTable q1 = random_q(), q2 = random_q();
    const double dist = (q1.values - q2.values).lpNorm<Eigen::Infinity>();
    const double single =
        (bellman_optimality(task.env(0), q1).values - bellman_optimality(task.env(0), q2).values).lpNorm<Eigen::Infinity>();
    const double averaged = (average_bellman(task, q1).values - average_bellman(task, q2).values).lpNorm<Eigen::Infinity>();
    // 1e-12 absorbs floating-point rounding in the comparison
    r.worst_slack = std::min({r.worst_slack, task.gamma() * dist - single + 1e-12, task.gamma() * dist - averaged + 1e-12});
    ++r.cases;
  }
  r.passed = r.worst_slack >= 0.0;
  return r;
}

struct GradientCheck {
  double policy_rel_err = 0.0;
  double softmax_rel_err = 0.0;
};

/// Central-difference check of both gradient formulas on one instance.
/// Policy gradient: directional derivatives along e_a - e_b within each
/// state row. Softmax gradient: coordinate-wise on logits.
inline GradientCheck check_gradients(const TabularMdp& mdp, const StateDistribution& d0, const StochasticPolicy& pi,
                                     const LogitTable& logits, double h = 1e-6) {
  GradientCheck out;
  const auto ns = static_cast<Eigen::Index>(mdp.num_states());
  const auto na = static_cast<Eigen::Index>(mdp.num_actions());

  auto objective = [&](const Matrix& probs) {
    // Perturbed tables may leave the simplex by O(h); evaluate the linear extension.
    const Matrix p_pi = detail::policy_transition(mdp, probs);
    const Vector r_pi = detail::policy_reward(mdp, probs);
    return d0.probs().dot(detail::solve_discounted(p_pi, mdp.gamma(), r_pi, false));
  };
  const Matrix grad = exact_policy_gradient(mdp, pi, d0);
  double num = 0.0, den = 0.0;
  for (Eigen::Index s = 0; s < ns; ++s) {
    for (Eigen::Index a = 1; a < na; ++a) {
      Matrix dir = Matrix::Zero(ns, na);
      dir(s, a) = 1.0;
      dir(s, 0) = -1.0;
      const double fd = (objective(pi.probs() + h * dir) - objective(pi.probs() - h * dir)) / (2.0 * h);
      const double an = grad(s, a) - grad(s, 0);
      num += (fd - an) * (fd - an);
      den += an * an;
    }
  }
  out.policy_rel_err = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);

  const Matrix sgrad = softmax_gradient(mdp, logits, d0);
  auto soft_objective = [&](const Matrix& l) { return value_at(mdp, softmax_policy(LogitTable(l)), d0); };
  num = den = 0.0;
  for (Eigen::Index s = 0; s < ns; ++s) {
    for (Eigen::Index a = 0; a < na; ++a) {
      Matrix plus = logits.logits, minus = logits.logits;
      plus(s, a) += h;
      minus(s, a) -= h;
      const double fd = (soft_objective(plus) - soft_objective(minus)) / (2.0 * h);
      num += (fd - sgrad(s, a)) * (fd - sgrad(s, a));
      den += sgrad(s, a) * sgrad(s, a);
    }
  }
  out.softmax_rel_err = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  return out;
}

/// Random gradient-check instance: |S|, |A| in [2, 6], interior policy and logits.
struct GradientInstance {
  TabularMdp mdp;
  StateDistribution d0;
  StochasticPolicy policy;
  LogitTable logits;
};

inline GradientInstance gradient_instance(std::uint64_t seed, int index) {
  Rng rng(seed, "gradient_instance", static_cast<std::uint64_t>(index));
  const std::size_t ns = 2 + rng.next_u64() % 5;
  const std::size_t na = 2 + rng.next_u64() % 5;
  const TransitionMode mode = index % 2 == 0 ? TransitionMode::dirichlet : TransitionMode::bernoulli;
  TabularMdp mdp = make_random_mdp(substream_key(seed, "gradient_mdp", static_cast<std::uint64_t>(index)), ns, na, mode, 0.9);
  Vector d0(static_cast<Eigen::Index>(ns));
  for (Eigen::Index s = 0; s < d0.size(); ++s) d0(s) = rng.exponential();
  d0 /= d0.sum();
  // Mixing with uniform keeps the policy away from the simplex boundary.
  Matrix probs = 0.5 * random_interior_policy(rng, ns, na).probs() +
                 0.5 * StochasticPolicy::uniform(ns, na).probs();
  Matrix logits(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(na));
  for (Eigen::Index s = 0; s < logits.rows(); ++s)
    for (Eigen::Index a = 0; a < logits.cols(); ++a) logits(s, a) = rng.uniform(-2.0, 2.0);
  return {std::move(mdp), StateDistribution(std::move(d0)), StochasticPolicy(std::move(probs)), LogitTable(std::move(logits))};
}

inline std::vector<PropertyResult> gradient_suite(std::uint64_t seed, int num_instances = 50, double tol = 1e-5) {
  PropertyResult pg{"policy_gradient_fd"}, sg{"softmax_gradient_fd"};
  for (int i = 0; i < num_instances; ++i) {
    const GradientInstance inst = gradient_instance(seed, i);
    const GradientCheck c = check_gradients(inst.mdp, inst.d0, inst.policy, inst.logits);
    pg.worst_slack = std::min(pg.worst_slack, tol - c.policy_rel_err);
    sg.worst_slack = std::min(sg.worst_slack, tol - c.softmax_rel_err);
    ++pg.cases;
    ++sg.cases;
  }
  pg.passed = pg.worst_slack >= 0.0;
  sg.passed = sg.worst_slack >= 0.0;
  return {pg, sg};
}

/// Runs a named suite ("all" runs every suite).
inline std::vector<PropertyResult> run_suite(std::string_view suite, std::uint64_t seed) {
  if (!is_suite(suite)) throw InvalidArgument("unknown verification suite '" + std::string(suite) + "'");
  std::vector<PropertyResult> out;
  auto want = [&](std::string_view s) { return suite == "all" || suite == s; };
  if (want("lemmas")) {
    auto r = lemma_suite(seed);
    out.insert(out.end(), r.begin(), r.end());
  }
  if (want("qavg_bound")) out.push_back(qavg_bound_suite(seed));
  if (want("counterexample")) out.push_back(counterexample_suite());
  if (want("contraction")) out.push_back(contraction_suite(seed));
  if (want("gradients")) {
    auto r = gradient_suite(seed);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

}  // namespace fedmdp::checks
