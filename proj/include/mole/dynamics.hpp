#pragma once

// Glue between raw environment transitions and the network: frozen
// per-dimension normalization, a transition history that cuts K-windows, and a
// dynamics model view used by the planner.
//
// The network input is normalize([s; a]) and its target is the normalized
// state increment (s' - s). Predictions are mapped back with
// s' = s + out_mean + out_std .* f(x).

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "mole/neuralnet.hpp"

namespace mole {

struct Normalizer {
  Eigen::VectorXd in_mean, in_std;
  Eigen::VectorXd out_mean, out_std;

  static Normalizer identity(int in_dim, int out_dim) {
    return {Eigen::VectorXd::Zero(in_dim), Eigen::VectorXd::Ones(in_dim),
            Eigen::VectorXd::Zero(out_dim), Eigen::VectorXd::Ones(out_dim)};
  }

  /// Column-wise statistics; near-constant dimensions get unit scale.
  static Normalizer fit(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& deltas) {
    auto stats = [](const Eigen::MatrixXd& m, Eigen::VectorXd& mean, Eigen::VectorXd& sd) {
      mean = m.rowwise().mean();
      sd = ((m.colwise() - mean).array().square().rowwise().sum() / std::max<Eigen::Index>(1, m.cols()))
               .sqrt();
      for (Eigen::Index i = 0; i < sd.size(); ++i)
        if (!(sd[i] > 1e-8)) sd[i] = 1.0;
    };
    Normalizer n;
    stats(inputs, n.in_mean, n.in_std);
    stats(deltas, n.out_mean, n.out_std);
    return n;
  }

  int input_dim() const { return static_cast<int>(in_mean.size()); }
  int output_dim() const { return static_cast<int>(out_mean.size()); }

  template <typename Derived>
  Eigen::MatrixXd normalize_inputs(const Eigen::MatrixBase<Derived>& x) const {
    return ((x.colwise() - in_mean).array().colwise() / in_std.array()).matrix();
  }
  template <typename Derived>
  Eigen::MatrixXd normalize_deltas(const Eigen::MatrixBase<Derived>& d) const {
    return ((d.colwise() - out_mean).array().colwise() / out_std.array()).matrix();
  }
  template <typename Derived>
  Eigen::MatrixXd denormalize_deltas(const Eigen::MatrixBase<Derived>& y) const {
    return ((y.array().colwise() * out_std.array()).colwise() + out_mean.array()).matrix();
  }

  friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

/// Append-only record of (s, a, s') triples observed in one trial.
class TransitionHistory {
 public:
  TransitionHistory(int state_dim, int action_dim) : state_dim_(state_dim), action_dim_(action_dim) {}

  void push(const Eigen::VectorXd& s, const Eigen::VectorXd& a, const Eigen::VectorXd& next) {
    if (s.size() != state_dim_ || next.size() != state_dim_ || a.size() != action_dim_)
      throw ArgumentError("TransitionHistory: transition dimensions do not match");
    states_.push_back(s);
    actions_.push_back(a);
    next_states_.push_back(next);
  }

  std::size_t size() const { return states_.size(); }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }

  const Eigen::VectorXd& state(std::size_t i) const { return states_[i]; }
  const Eigen::VectorXd& action(std::size_t i) const { return actions_[i]; }
  const Eigen::VectorXd& next_state(std::size_t i) const { return next_states_[i]; }

  /// Normalized window over transitions [begin, end).
  TransitionWindow window(std::size_t begin, std::size_t end, const Normalizer& norm) const {
    if (begin >= end || end > size()) throw ArgumentError("TransitionHistory: bad window range");
    const auto k = static_cast<Eigen::Index>(end - begin);
    Eigen::MatrixXd x(state_dim_ + action_dim_, k), d(state_dim_, k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const std::size_t i = begin + static_cast<std::size_t>(j);
      x.col(j).head(state_dim_) = states_[i];
      x.col(j).tail(action_dim_) = actions_[i];
      d.col(j) = next_states_[i] - states_[i];
    }
    return {norm.normalize_inputs(x), norm.normalize_deltas(d)};
  }

  /// The most recent min(k, size) transitions.
  TransitionWindow latest(std::size_t k, const Normalizer& norm) const {
    const std::size_t n = size();
    return window(n > k ? n - k : 0, n, norm);
  }

 private:
  int state_dim_, action_dim_;
  std::vector<Eigen::VectorXd> states_, actions_, next_states_;
};

/// Non-owning view: network parameters plus the normalization they were
/// trained under.
struct DynamicsModel {
  const ParamVector* params;
  const Normalizer* norm;

  /// states: ds x N, actions: da x N -> predicted next states ds x N.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const {
    const Eigen::Index ds = states.rows();
    Eigen::MatrixXd x(ds + actions.rows(), states.cols());
    x.topRows(ds) = states;
    x.bottomRows(actions.rows()) = actions;
    const Eigen::MatrixXd y = forward_batch(*params, norm->normalize_inputs(x));
    return states + norm->denormalize_deltas(y);
  }
};

}  // namespace mole
