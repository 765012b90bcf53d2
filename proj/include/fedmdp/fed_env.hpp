#pragma once

#include "fedmdp/mdp.hpp"
#include "fedmdp/rng.hpp"
#include "fedmdp/types.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fedmdp {

enum class TransitionMode { dirichlet, bernoulli };

inline std::string_view to_string(TransitionMode m) {
  return m == TransitionMode::dirichlet ? "dirichlet" : "bernoulli";
}

inline TransitionMode transition_mode_from_string(std::string_view s) {
  if (s == "dirichlet") return TransitionMode::dirichlet;
  if (s == "bernoulli") return TransitionMode::bernoulli;
  throw InvalidArgument("unknown transition mode '" + std::string(s) + "'");
}

/// n environments that differ only in their transition tables.
class FederatedTask {
 public:
  FederatedTask(std::vector<TabularMdp> envs, StateDistribution d0) : envs_(std::move(envs)), d0_(std::move(d0)) {
    validate();
  }

  std::size_t size() const { return envs_.size(); }
  const std::vector<TabularMdp>& envs() const { return envs_; }
  const TabularMdp& env(std::size_t k) const { return envs_.at(k); }
  const StateDistribution& d0() const { return d0_; }
  std::size_t num_states() const { return envs_.front().num_states(); }
  std::size_t num_actions() const { return envs_.front().num_actions(); }
  double gamma() const { return envs_.front().gamma(); }
  const Matrix& reward() const { return envs_.front().reward(); }

  FederatedTask with_d0(StateDistribution d0) const { return FederatedTask(envs_, std::move(d0)); }

 private:
  void validate() const {
    detail::require(!envs_.empty(), "a federated task needs at least one environment");
    const TabularMdp& first = envs_.front();
    for (const TabularMdp& e : envs_) {
      detail::require_shape(e.num_states() == first.num_states() && e.num_actions() == first.num_actions(),
                            "environments must share state and action spaces");
      detail::require(e.gamma() == first.gamma(), "environments must share gamma");
      detail::require(e.reward() == first.reward(), "environments must share a bitwise-identical reward table");
    }
    detail::require_shape(d0_.size() == first.num_states(), "d0 length does not match the state space");
  }

  std::vector<TabularMdp> envs_;
  StateDistribution d0_;
};

struct HeterogeneityReport {
  double kappa1 = 0.0;
  double kappa2_estimate = 0.0;
  int num_policy_samples = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline void check_sizes(std::size_t num_states, std::size_t num_actions, double gamma) {
  require(num_states >= 1 && num_actions >= 1, "state and action counts must be positive");
  require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
}

inline Matrix random_rewards(std::uint64_t seed, std::size_t num_states, std::size_t num_actions) {
  Rng rng(seed, "reward");
  Matrix r(static_cast<Eigen::Index>(num_states), static_cast<Eigen::Index>(num_actions));
  for (Eigen::Index s = 0; s < r.rows(); ++s)
    for (Eigen::Index a = 0; a < r.cols(); ++a) r(s, a) = rng.uniform();
  return r;
}

/// One transition table drawn from the given substream.
inline Matrix random_transitions(Rng& rng, std::size_t num_states, std::size_t num_actions, TransitionMode mode) {
  const auto ns = static_cast<Eigen::Index>(num_states);
  Matrix p(static_cast<Eigen::Index>(num_states * num_actions), ns);
  for (Eigen::Index row = 0; row < p.rows(); ++row) {
    if (mode == TransitionMode::dirichlet) {
      // Normalized Exp(1) draws are uniform on the simplex.
      for (Eigen::Index j = 0; j < ns; ++j) p(row, j) = rng.exponential();
    } else {
      do {
        for (Eigen::Index j = 0; j < ns; ++j) p(row, j) = rng.bernoulli_half() ? 1.0 : 0.0;
      } while (p.row(row).sum() == 0.0);
    }
    p.row(row) /= p.row(row).sum();
  }
  return p;
}

}  // namespace detail

/// Rewards i.i.d. U[0,1]; transitions per `mode`. Deterministic in `seed`.
inline TabularMdp make_random_mdp(std::uint64_t seed, std::size_t num_states, std::size_t num_actions,
                                  TransitionMode mode, double gamma) {
  detail::check_sizes(num_states, num_actions, gamma);
  Rng rng(seed, "transition", 0);
  return TabularMdp(detail::random_rewards(seed, num_states, num_actions),
                    detail::random_transitions(rng, num_states, num_actions, mode), gamma);
}

/// n environments sharing one random reward table; d0 uniform.
/// Environment k draws from substream ("transition", k), so n=1 reproduces make_random_mdp.
inline FederatedTask make_random_task(std::uint64_t seed, std::size_t n, std::size_t num_states,
                                      std::size_t num_actions, double gamma, TransitionMode mode) {
  detail::check_sizes(num_states, num_actions, gamma);
  detail::require(n >= 1, "task needs at least one environment");
  const Matrix reward = detail::random_rewards(seed, num_states, num_actions);
  std::vector<TabularMdp> envs;
  envs.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Rng rng(seed, "transition", k);
    envs.emplace_back(reward, detail::random_transitions(rng, num_states, num_actions, mode), gamma);
  }
  return FederatedTask(std::move(envs), StateDistribution::uniform(num_states));
}

/// Fresh environment sharing `reference`'s rewards and gamma, drawn from substream (tag, index).
inline TabularMdp draw_environment_like(const TabularMdp& reference, std::uint64_t seed, std::string_view tag,
                                        std::uint64_t index, TransitionMode mode) {
  Rng rng(seed, tag, index);
  return TabularMdp(reference.reward(),
                    detail::random_transitions(rng, reference.num_states(), reference.num_actions(), mode),
                    reference.gamma());
}

/// Environment k gets kappa * P_k + (1 - kappa) * P_0.
inline FederatedTask interpolate_task(const TabularMdp& base, const std::vector<TabularMdp>& noises, double kappa,
                                      std::optional<StateDistribution> d0 = std::nullopt) {
  detail::require(kappa >= 0.0 && kappa <= 1.0, "kappa must lie in [0, 1]");
  detail::require(!noises.empty(), "interpolation needs at least one noise environment");
  std::vector<TabularMdp> envs;
  envs.reserve(noises.size());
  for (const TabularMdp& noise : noises) {
    detail::require_shape(noise.num_states() == base.num_states() && noise.num_actions() == base.num_actions(),
                          "noise environment shape does not match base");
    detail::require(noise.reward() == base.reward(), "noise environment rewards differ from base");
    detail::require(noise.gamma() == base.gamma(), "noise environment gamma differs from base");
    Matrix p = kappa * noise.transition() + (1.0 - kappa) * base.transition();
    envs.emplace_back(base.reward(), std::move(p), base.gamma());
  }
  return FederatedTask(std::move(envs), d0 ? *d0 : StateDistribution::uniform(base.num_states()));
}

// WindyCliff layout: a 4x4 grid indexed row * 4 + col with row 0 at the top,
// plus one absorbing state. Start is bottom-left, goal bottom-right, and the
// two interior bottom-row cells are the cliff. Goal and cliff cells pay their
// reward (+100 / -100) on the next action and then move to the absorbing
// state; rewards therefore depend only on the state and are identical for
// every wind intensity.
namespace windy_cliff {

inline constexpr std::size_t kRows = 4;
inline constexpr std::size_t kCols = 4;
inline constexpr std::size_t kNumCells = kRows * kCols;
inline constexpr std::size_t kAbsorbing = kNumCells;
inline constexpr std::size_t kNumStates = kNumCells + 1;
inline constexpr std::size_t kNumActions = 4;
inline constexpr std::size_t kStart = (kRows - 1) * kCols;
inline constexpr std::size_t kGoal = kRows * kCols - 1;
inline constexpr double kGoalReward = 100.0;
inline constexpr double kCliffReward = -100.0;

enum Action : std::size_t { up = 0, down = 1, left = 2, right = 3 };

inline bool is_cliff(std::size_t cell) { return cell > kStart && cell < kGoal; }

inline std::size_t cell(std::size_t row, std::size_t col) { return row * kCols + col; }

/// Destination of a move with off-grid moves clamped to the current cell.
inline std::size_t move(std::size_t from, Action a) {
  std::size_t r = from / kCols, c = from % kCols;
  switch (a) {
    case up: r = r == 0 ? r : r - 1; break;
    case down: r = r + 1 == kRows ? r : r + 1; break;
    case left: c = c == 0 ? c : c - 1; break;
    case right: c = c + 1 == kCols ? c : c + 1; break;
  }
  return cell(r, c);
}

}  // namespace windy_cliff

/// Cliff-walking gridworld where wind replaces any non-"down" action by a
/// "down" move with probability theta / 3.
inline TabularMdp make_windy_cliff(double theta, double gamma) {
  using namespace windy_cliff;
  detail::require(theta >= 0.0 && theta <= 1.0, "wind intensity theta must lie in [0, 1]");
  detail::require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
  const auto ns = static_cast<Eigen::Index>(kNumStates);
  const auto na = static_cast<Eigen::Index>(kNumActions);
  Matrix reward = Matrix::Zero(ns, na);
  Matrix p = Matrix::Zero(ns * na, ns);
  const double gust = theta / 3.0;
  for (std::size_t s = 0; s < kNumStates; ++s) {
    for (std::size_t a = 0; a < kNumActions; ++a) {
      const Eigen::Index row = static_cast<Eigen::Index>(s * kNumActions + a);
      if (s == kAbsorbing || s == kGoal || is_cliff(s)) {
        p(row, static_cast<Eigen::Index>(kAbsorbing)) = 1.0;
        if (s == kGoal) reward(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = kGoalReward;
        if (is_cliff(s)) reward(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = kCliffReward;
        continue;
      }
      const auto action = static_cast<Action>(a);
      if (action == down || gust == 0.0) {
        p(row, static_cast<Eigen::Index>(move(s, action))) = 1.0;
      } else {
        p(row, static_cast<Eigen::Index>(move(s, action))) += 1.0 - gust;
        p(row, static_cast<Eigen::Index>(move(s, down))) += gust;
      }
    }
  }
  return TabularMdp(std::move(reward), std::move(p), gamma);
}

/// Wind intensity of environment `index` in substream `tag`, uniform on [low, high].
inline double draw_wind(std::uint64_t seed, std::string_view tag, std::uint64_t index, double low, double high) {
  Rng rng(seed, tag, index);
  return rng.uniform(low, high);
}

/// n WindyCliff environments with theta_k ~ U[theta_low, theta_high]; d0 = start cell.
inline FederatedTask make_windy_cliff_task(std::uint64_t seed, std::size_t n, double theta_low, double theta_high,
                                           double gamma) {
  detail::require(n >= 1, "task needs at least one environment");
  detail::require(0.0 <= theta_low && theta_low <= theta_high && theta_high <= 1.0,
                  "wind range must satisfy 0 <= low <= high <= 1");
  std::vector<TabularMdp> envs;
  envs.reserve(n);
  for (std::size_t k = 0; k < n; ++k) envs.push_back(make_windy_cliff(draw_wind(seed, "wind", k, theta_low, theta_high), gamma));
  return FederatedTask(std::move(envs), StateDistribution::point_mass(windy_cliff::kNumStates, windy_cliff::kStart));
}

/// The environment whose transition is the mean of the task's transitions.
inline TabularMdp imaginary_mdp(const FederatedTask& task) {
  Matrix sum = task.env(0).transition();
  for (std::size_t k = 1; k < task.size(); ++k) sum += task.env(k).transition();
  Matrix mean = sum / static_cast<double>(task.size());
  return TabularMdp(task.reward(), std::move(mean), task.gamma());
}

/// Exact kappa1. The objective sum_i sum_s' |P_i^pi - Pbar^pi| is convex in
/// pi(.|s), so its maximum over the simplex sits at a vertex; it suffices to
/// scan every (s, a).
inline double kappa1(const FederatedTask& task) {
  const Matrix mean = imaginary_mdp(task).transition();
  double best = 0.0;
  for (Eigen::Index row = 0; row < mean.rows(); ++row) {
    // plain loops fix the summation order: environment, then successor
    double total = 0.0;
    for (std::size_t i = 0; i < task.size(); ++i) {
      const Matrix& p = task.env(i).transition();
      for (Eigen::Index next = 0; next < mean.cols(); ++next) total += std::abs(p(row, next) - mean(row, next));
    }
    best = std::max(best, total);
  }
  return best;
}

/// Random interior policy with Dirichlet(1,...,1) rows.
inline StochasticPolicy random_interior_policy(Rng& rng, std::size_t num_states, std::size_t num_actions) {
  Matrix p(static_cast<Eigen::Index>(num_states), static_cast<Eigen::Index>(num_actions));
  for (Eigen::Index s = 0; s < p.rows(); ++s) {
    for (Eigen::Index a = 0; a < p.cols(); ++a) p(s, a) = rng.exponential();
    p.row(s) /= p.row(s).sum();
  }
  return StochasticPolicy(std::move(p));
}

/// (1/n) sum_i ||grad_i(pi) - mean_j grad_j(pi)||_2 for one policy.
inline double gradient_dispersion(const FederatedTask& task, const StochasticPolicy& policy) {
  std::vector<Matrix> grads;
  grads.reserve(task.size());
  for (const TabularMdp& env : task.envs()) grads.push_back(exact_policy_gradient(env, policy, task.d0()));
  Matrix mean = grads.front();
  for (std::size_t k = 1; k < grads.size(); ++k) mean += grads[k];
  mean /= static_cast<double>(grads.size());
  double total = 0.0;
  for (const Matrix& g : grads) total += (g - mean).norm();
  return total / static_cast<double>(grads.size());
}

/// Sampled lower bound on kappa2: the max gradient dispersion over
/// `num_samples` random interior policies. Sample j uses substream
/// ("kappa2", j), so sample sets for increasing counts are nested.
inline double kappa2_estimate(const FederatedTask& task, int num_samples, std::uint64_t seed) {
  detail::require(num_samples >= 1, "kappa2 needs at least one policy sample");
  double best = 0.0;
  for (int j = 0; j < num_samples; ++j) {
    Rng rng(seed, "kappa2", static_cast<std::uint64_t>(j));
    best = std::max(best, gradient_dispersion(task, random_interior_policy(rng, task.num_states(), task.num_actions())));
  }
  return best;
}

inline HeterogeneityReport heterogeneity_report(const FederatedTask& task, int num_samples, std::uint64_t seed) {
  return HeterogeneityReport{kappa1(task), kappa2_estimate(task, num_samples, seed), num_samples, seed};
}

/// Two-environment task on which the optimal policy depends on d0.
///
/// States {s0, s1}, actions {a0, a1}, gamma 0.9. Each base transition keeps
/// 1 - tau on its base successor and leaks tau to the other state.
inline FederatedTask make_counterexample_task(double tau) {
  detail::require(tau >= 0.0 && tau < 0.5, "leak probability tau must lie in [0, 0.5)");
  Matrix reward(2, 2);
  reward << 10.0, 1000.0,
            0.0, -2.0;
  // base successor per (s, a) row, env1 then env2
  const int env1[4] = {0, 1, 1, 1};
  const int env2[4] = {0, 0, 1, 0};
  auto build = [&](const int* succ) {
    Matrix p(4, 2);
    for (int row = 0; row < 4; ++row) {
      p(row, succ[row]) = 1.0 - tau;
      p(row, 1 - succ[row]) = tau;
    }
    return TabularMdp(reward, std::move(p), 0.9);
  };
  return FederatedTask({build(env1), build(env2)}, StateDistribution::point_mass(2, 0));
}

}  // namespace fedmdp
