#pragma once

#include "fedmdp/types.hpp"

#include <algorithm>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace fedmdp {

/// Above this many states, evaluation switches from a dense LU solve to
/// fixed-point iteration.
inline constexpr std::size_t kDirectSolveMaxStates = 512;
inline constexpr double kIterativeEvaluationResidual = 1e-10;

namespace detail {

inline void check_policy_shape(const TabularMdp& mdp, const StochasticPolicy& policy) {
  require_shape(policy.num_states() == mdp.num_states() && policy.num_actions() == mdp.num_actions(),
                "policy shape does not match MDP");
}

inline void check_d0_shape(const TabularMdp& mdp, const StateDistribution& d0) {
  require_shape(d0.size() == mdp.num_states(), "initial distribution length does not match MDP");
}

/// Row-wise expectation of per-(s,a) successor rows under the policy: P^pi.
inline Matrix policy_transition(const TabularMdp& mdp, const Matrix& probs) {
  const auto num_s = static_cast<Eigen::Index>(mdp.num_states());
  const auto num_a = static_cast<Eigen::Index>(mdp.num_actions());
  Matrix p_pi = Matrix::Zero(num_s, num_s);
  for (Eigen::Index s = 0; s < num_s; ++s) {
    for (Eigen::Index a = 0; a < num_a; ++a) {
      const double w = probs(s, a);
      if (w != 0.0) p_pi.row(s) += w * mdp.transition().row(s * num_a + a);
    }
  }
  return p_pi;
}

inline Vector policy_reward(const TabularMdp& mdp, const Matrix& probs) {
  return mdp.reward().cwiseProduct(probs).rowwise().sum();
}

/// R(s,a) + gamma * sum_s' P(s'|s,a) v(s').
inline Matrix backup(const TabularMdp& mdp, const Vector& v) {
  Vector next = mdp.transition() * v;
  Eigen::Map<const Matrix> next_sa(next.data(), mdp.reward().rows(), mdp.reward().cols());
  return mdp.reward() + mdp.gamma() * next_sa;
}

/// Solves (I - gamma M) x = b, where M is P^pi (transpose=false) or its
/// transpose. Falls back to fixed-point iteration for large state spaces.
inline Vector solve_discounted(const Matrix& p_pi, double gamma, const Vector& b, bool transpose) {
  const Eigen::Index n = p_pi.rows();
  if (static_cast<std::size_t>(n) <= kDirectSolveMaxStates) {
    Matrix a = Matrix::Identity(n, n) - gamma * p_pi;
    Eigen::PartialPivLU<Matrix> lu(a);
    return transpose ? Vector(lu.transpose().solve(b)) : Vector(lu.solve(b));
  }
  Vector x = b;
  for (int it = 0; it < 1'000'000; ++it) {
    Vector next = transpose ? Vector(b + gamma * (p_pi.transpose() * x)) : Vector(b + gamma * (p_pi * x));
    const double residual = (next - x).lpNorm<Eigen::Infinity>();
    x = std::move(next);
    if (residual <= kIterativeEvaluationResidual) return x;
  }
  throw ConvergenceError("policy evaluation did not converge", std::numeric_limits<double>::quiet_NaN());
}

}  // namespace detail

/// Bellman optimality operator: (TQ)(s,a) = R(s,a) + gamma E[max_a' Q(s',a')].
inline QTable bellman_optimality(const TabularMdp& mdp, const QTable& q) {
  detail::require_shape(q.num_states() == mdp.num_states() && q.num_actions() == mdp.num_actions(),
                        "Q table shape does not match MDP");
  Vector v = q.values.rowwise().maxCoeff();
  return QTable(detail::backup(mdp, v));
}

/// Iterates the Bellman optimality operator from Q = 0.
///
/// Stops once ||TQ - Q||_inf <= tol * (1 - gamma), which bounds both the
/// residual and the distance to the fixed point by tol.
inline QTable q_value_iteration(const TabularMdp& mdp, double tol = 1e-10, int max_iter = 100'000) {
  detail::require(tol > 0.0, "tolerance must be positive");
  const double stop = tol * (1.0 - mdp.gamma());
  QTable q = QTable::zeros(mdp.num_states(), mdp.num_actions());
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    QTable next = bellman_optimality(mdp, q);
    residual = (next.values - q.values).lpNorm<Eigen::Infinity>();
    if (residual <= stop) return q;
    q = std::move(next);
  }
  throw ConvergenceError("value iteration exhausted its iteration budget", residual);
}

/// V^pi as the solution of V = R^pi + gamma P^pi V.
inline ValueVector policy_evaluation(const TabularMdp& mdp, const StochasticPolicy& policy) {
  detail::check_policy_shape(mdp, policy);
  const Matrix p_pi = detail::policy_transition(mdp, policy.probs());
  const Vector r_pi = detail::policy_reward(mdp, policy.probs());
  return ValueVector{detail::solve_discounted(p_pi, mdp.gamma(), r_pi, false)};
}

/// Q^pi(s,a) = R(s,a) + gamma sum_s' P(s'|s,a) V^pi(s').
inline QTable policy_q(const TabularMdp& mdp, const StochasticPolicy& policy) {
  const ValueVector v = policy_evaluation(mdp, policy);
  return QTable(detail::backup(mdp, v.values));
}

/// Normalized discounted state visitation d(s) = (1-gamma) sum_t gamma^t Pr(s_t = s).
inline StateDistribution discounted_occupancy(const TabularMdp& mdp, const StochasticPolicy& policy,
                                              const StateDistribution& d0) {
  detail::check_policy_shape(mdp, policy);
  detail::check_d0_shape(mdp, d0);
  const Matrix p_pi = detail::policy_transition(mdp, policy.probs());
  Vector d = detail::solve_discounted(p_pi, mdp.gamma(), (1.0 - mdp.gamma()) * d0.probs(), true);
  // Round-off can leave tiny negative entries or a sum off by ~1e-16.
  d = d.cwiseMax(0.0);
  d /= d.sum();
  return StateDistribution(std::move(d));
}

/// Everything the gradient formulas need from one factorization.
struct PolicyAnalysis {
  Vector value;      ///< V^pi
  Matrix q;          ///< Q^pi
  Vector occupancy;  ///< d_{pi,d0}
};

inline PolicyAnalysis analyze_policy(const TabularMdp& mdp, const Matrix& probs, const StateDistribution& d0) {
  const Eigen::Index n = static_cast<Eigen::Index>(mdp.num_states());
  const Matrix p_pi = detail::policy_transition(mdp, probs);
  const Vector r_pi = detail::policy_reward(mdp, probs);
  const Vector b = (1.0 - mdp.gamma()) * d0.probs();
  PolicyAnalysis out;
  if (static_cast<std::size_t>(n) <= kDirectSolveMaxStates) {
    Matrix a = Matrix::Identity(n, n) - mdp.gamma() * p_pi;
    Eigen::PartialPivLU<Matrix> lu(a);
    out.value = lu.solve(r_pi);
    out.occupancy = lu.transpose().solve(b);
  } else {
    out.value = detail::solve_discounted(p_pi, mdp.gamma(), r_pi, false);
    out.occupancy = detail::solve_discounted(p_pi, mdp.gamma(), b, true);
  }
  out.q = detail::backup(mdp, out.value);
  return out;
}

/// d g_{d0} / d pi(a|s) = d_{pi,d0}(s) Q^pi(s,a) / (1 - gamma).
///
/// This is the gradient of the objective extended linearly to arbitrary
/// tables; only tangent directions (rows summing to zero) are meaningful on
/// the simplex.
inline Matrix exact_policy_gradient(const TabularMdp& mdp, const StochasticPolicy& policy,
                                    const StateDistribution& d0) {
  detail::check_policy_shape(mdp, policy);
  detail::check_d0_shape(mdp, d0);
  const PolicyAnalysis pa = analyze_policy(mdp, policy.probs(), d0);
  return (pa.occupancy.asDiagonal() * pa.q) / (1.0 - mdp.gamma());
}

/// Row-wise softmax with max subtraction.
inline StochasticPolicy softmax_policy(const LogitTable& logits) {
  detail::require_shape(logits.logits.rows() > 0 && logits.logits.cols() > 0, "logit table must be non-empty");
  detail::require(logits.logits.allFinite(), "logits must be finite");
  Matrix p = logits.logits;
  for (Eigen::Index s = 0; s < p.rows(); ++s) {
    p.row(s).array() -= p.row(s).maxCoeff();
    p.row(s) = p.row(s).array().exp().matrix();
    p.row(s) /= p.row(s).sum();
  }
  return StochasticPolicy(std::move(p));
}

/// d g_{d0} / d theta(s,a) = d(s) pi(a|s) (Q^pi(s,a) - V^pi(s)) / (1 - gamma).
inline Matrix softmax_gradient(const TabularMdp& mdp, const LogitTable& logits, const StateDistribution& d0) {
  detail::require_shape(logits.num_states() == mdp.num_states() && logits.num_actions() == mdp.num_actions(),
                        "logit table shape does not match MDP");
  detail::check_d0_shape(mdp, d0);
  const StochasticPolicy pi = softmax_policy(logits);
  const PolicyAnalysis pa = analyze_policy(mdp, pi.probs(), d0);
  Matrix advantage = pa.q.colwise() - pa.value;
  Matrix grad = pi.probs().cwiseProduct(advantage);
  return (pa.occupancy.asDiagonal() * grad) / (1.0 - mdp.gamma());
}

/// Euclidean projection onto the probability simplex (sort, then threshold).
inline Eigen::RowVectorXd project_row_to_simplex(const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  detail::require_shape(v.size() > 0, "cannot project an empty vector");
  detail::require(v.allFinite(), "cannot project a vector with non-finite entries");
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double threshold = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumsum += u[k];
    const double candidate = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - candidate > 0.0) threshold = candidate;
  }
  Eigen::RowVectorXd out = (v.array() - threshold).cwiseMax(0.0).matrix();
  // Renormalize away summation round-off so the row validates as a simplex point.
  out /= out.sum();
  return out;
}

/// Applies project_row_to_simplex to every row.
inline Matrix project_rows_to_simplex(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index s = 0; s < m.rows(); ++s) out.row(s) = project_row_to_simplex(m.row(s));
  return out;
}

/// Deterministic argmax policy; ties go to the lowest action index.
inline StochasticPolicy greedy_policy(const QTable& q) {
  detail::require_shape(q.values.rows() > 0 && q.values.cols() > 0, "Q table must be non-empty");
  detail::require(q.values.allFinite(), "Q table must be finite");
  std::vector<std::size_t> actions(q.num_states());
  for (Eigen::Index s = 0; s < q.values.rows(); ++s) {
    Eigen::Index best = 0;
    for (Eigen::Index a = 1; a < q.values.cols(); ++a) {
      if (q.values(s, a) > q.values(s, best)) best = a;
    }
    actions[static_cast<std::size_t>(s)] = static_cast<std::size_t>(best);
  }
  return StochasticPolicy::deterministic(actions, q.num_actions());
}

/// E_{s ~ d0}[V^pi(s)] in a single environment.
inline double value_at(const TabularMdp& mdp, const StochasticPolicy& policy, const StateDistribution& d0) {
  detail::check_d0_shape(mdp, d0);
  return d0.probs().dot(policy_evaluation(mdp, policy).values);
}

}  // namespace fedmdp
