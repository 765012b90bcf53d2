#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace fedmdp {

/// Dense row-major table. Row index is the state, column index the action
/// (or the successor state for per-(s,a) transition rows).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Tolerance used when validating probability rows.
inline constexpr double kProbabilityTolerance = 1e-9;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on mismatched table dimensions or malformed inputs.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An iterative solver exhausted its iteration budget.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

namespace detail {

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

inline void require_shape(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

inline bool is_simplex_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  if (row.size() == 0) return false;
  if (!row.allFinite()) return false;
  if ((row.array() < -kProbabilityTolerance).any()) return false;
  if ((row.array() > 1.0 + kProbabilityTolerance).any()) return false;
  return std::abs(row.sum() - 1.0) <= kProbabilityTolerance;
}

}  // namespace detail

/// Action-value table Q(s,a).
struct QTable {
  Matrix values;

  QTable() = default;
  explicit QTable(Matrix v) : values(std::move(v)) {}
  static QTable zeros(std::size_t num_states, std::size_t num_actions) {
    return QTable(Matrix::Zero(static_cast<Eigen::Index>(num_states),
                               static_cast<Eigen::Index>(num_actions)));
  }
  std::size_t num_states() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t num_actions() const { return static_cast<std::size_t>(values.cols()); }
};

/// Softmax parameters theta(s,a).
struct LogitTable {
  Matrix logits;

  LogitTable() = default;
  explicit LogitTable(Matrix l) : logits(std::move(l)) {}
  static LogitTable zeros(std::size_t num_states, std::size_t num_actions) {
    return LogitTable(Matrix::Zero(static_cast<Eigen::Index>(num_states),
                                   static_cast<Eigen::Index>(num_actions)));
  }
  std::size_t num_states() const { return static_cast<std::size_t>(logits.rows()); }
  std::size_t num_actions() const { return static_cast<std::size_t>(logits.cols()); }
};

/// pi(a|s); every row lies on the action simplex.
class StochasticPolicy {
 public:
  StochasticPolicy() = default;

  /// Validates that each row is a probability distribution.
  explicit StochasticPolicy(Matrix probs) : probs_(std::move(probs)) {
    detail::require_shape(probs_.rows() > 0 && probs_.cols() > 0, "policy must be non-empty");
    for (Eigen::Index s = 0; s < probs_.rows(); ++s) {
      if (!detail::is_simplex_row(probs_.row(s))) {
        throw InvalidArgument("policy row " + std::to_string(s) + " is not on the simplex");
      }
    }
  }

  static StochasticPolicy uniform(std::size_t num_states, std::size_t num_actions) {
    return StochasticPolicy(Matrix::Constant(static_cast<Eigen::Index>(num_states),
                                             static_cast<Eigen::Index>(num_actions),
                                             1.0 / static_cast<double>(num_actions)));
  }

  /// Deterministic policy from one action index per state.
  template <typename Range>
  static StochasticPolicy deterministic(const Range& actions, std::size_t num_actions) {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(std::size(actions)),
                            static_cast<Eigen::Index>(num_actions));
    Eigen::Index s = 0;
    for (auto a : actions) m(s++, static_cast<Eigen::Index>(a)) = 1.0;
    return StochasticPolicy(std::move(m));
  }

  const Matrix& probs() const { return probs_; }
  double operator()(std::size_t s, std::size_t a) const {
    return probs_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
  }
  std::size_t num_states() const { return static_cast<std::size_t>(probs_.rows()); }
  std::size_t num_actions() const { return static_cast<std::size_t>(probs_.cols()); }

 private:
  Matrix probs_;
};

/// One real per state.
struct ValueVector {
  Vector values;
  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

/// Probability distribution over states (initial distribution or occupancy).
class StateDistribution {
 public:
  StateDistribution() = default;
  explicit StateDistribution(Vector probs) : probs_(std::move(probs)) {
    detail::require_shape(probs_.size() > 0, "state distribution must be non-empty");
    if (!detail::is_simplex_row(probs_.transpose())) {
      throw InvalidArgument("state distribution is not a probability vector");
    }
  }

  static StateDistribution uniform(std::size_t num_states) {
    return StateDistribution(Vector::Constant(static_cast<Eigen::Index>(num_states),
                                              1.0 / static_cast<double>(num_states)));
  }
  static StateDistribution point_mass(std::size_t num_states, std::size_t state) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(num_states));
    v(static_cast<Eigen::Index>(state)) = 1.0;
    return StateDistribution(std::move(v));
  }

  const Vector& probs() const { return probs_; }
  std::size_t size() const { return static_cast<std::size_t>(probs_.size()); }

 private:
  Vector probs_;
};

/// A finite discounted MDP <S, A, R, P, gamma> stored as dense tables.
///
/// Transitions are stored as an (|S|*|A|) x |S| matrix whose row s*|A|+a
/// holds P(.|s,a).
class TabularMdp {
 public:
  TabularMdp() = default;

  TabularMdp(Matrix reward, Matrix transition, double gamma)
      : reward_(std::move(reward)), transition_(std::move(transition)), gamma_(gamma) {
    validate();
  }

  std::size_t num_states() const { return static_cast<std::size_t>(reward_.rows()); }
  std::size_t num_actions() const { return static_cast<std::size_t>(reward_.cols()); }
  double gamma() const { return gamma_; }
  const Matrix& reward() const { return reward_; }
  const Matrix& transition() const { return transition_; }

  double reward(std::size_t s, std::size_t a) const {
    return reward_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
  }
  double transition(std::size_t s, std::size_t a, std::size_t next) const {
    return transition_(row_index(s, a), static_cast<Eigen::Index>(next));
  }
  auto transition_row(std::size_t s, std::size_t a) const { return transition_.row(row_index(s, a)); }

  Eigen::Index row_index(std::size_t s, std::size_t a) const {
    return static_cast<Eigen::Index>(s * num_actions() + a);
  }

 private:
  void validate() const {
    detail::require_shape(reward_.rows() > 0 && reward_.cols() > 0, "reward table must be non-empty");
    detail::require_shape(transition_.rows() == reward_.rows() * reward_.cols() &&
                              transition_.cols() == reward_.rows(),
                          "transition table must be (|S|*|A|) x |S|");
    detail::require(reward_.allFinite(), "reward table has non-finite entries");
    detail::require(gamma_ >= 0.0 && gamma_ < 1.0, "gamma must lie in [0, 1)");
    for (Eigen::Index r = 0; r < transition_.rows(); ++r) {
      if (!detail::is_simplex_row(transition_.row(r))) {
        throw InvalidArgument("transition row for (s,a) index " + std::to_string(r) +
                              " is not a probability distribution");
      }
    }
  }

  Matrix reward_;
  Matrix transition_;
  double gamma_ = 0.0;
};

}  // namespace fedmdp
