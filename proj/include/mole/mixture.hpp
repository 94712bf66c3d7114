#pragma once

// Streaming EM over a growing set of task-specific networks with a
// Chinese-restaurant-process prior over task identity.
//
// Per step t (1-based; state.step_count == t - 1 on entry):
//   E: P(T_i | x_t, y_t) ∝ p_i(y_t | x_t) * n_i,  P(T_new | .) ∝ p_new(y_t | x_t) * alpha
//   M: theta_i <- theta_i - lr * P(T_i | .) * grad nll_i        for every task
//   spawn when P(T_new) > P(T_i) for all i, then redo E and M with the
//   candidate as a member of prior weight alpha.
//   n_i accumulates the posterior, renormalized over tasks that exist after
//   the step, so sum_i n_i == step_count always holds.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "mole/neuralnet.hpp"

namespace mole {

struct MixtureConfig {
  double alpha = 1.0;        // CRP concentration
  double online_lr = 0.01;   // step size of the weighted M-step
  double spawn_lr = 0.01;    // step size adapting a new-task candidate from the prior
  int em_iterations = 1;
  int window = 16;           // K
  int spawn_window_offset = 16;

  void validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ArgumentError("MixtureConfig: alpha must be >= 0");
    if (!(online_lr >= 0.0)) throw ArgumentError("MixtureConfig: online_lr must be >= 0");
    if (!(spawn_lr >= 0.0)) throw ArgumentError("MixtureConfig: spawn_lr must be >= 0");
    if (em_iterations < 1) throw ArgumentError("MixtureConfig: em_iterations must be >= 1");
    if (window < 1) throw ArgumentError("MixtureConfig: window must be >= 1");
    if (spawn_window_offset < 1) throw ArgumentError("MixtureConfig: spawn_window_offset must be >= 1");
  }
};

template <typename Scalar>
struct TaskEntry {
  int id;
  ParamVectorT<Scalar> params;
  Scalar prior_mass;
};

template <typename Scalar>
struct TaskPosterior {
  std::vector<Scalar> probs;  // aligned with MixtureState::tasks
  Scalar new_task_prob = 0;

  Scalar total() const {
    Scalar s = new_task_prob;
    for (Scalar p : probs) s += p;
    return s;
  }
};

template <typename Scalar>
struct MixtureState {
  std::vector<TaskEntry<Scalar>> tasks;
  long step_count = 0;
  ParamVectorT<Scalar> prior;
  int current_best = 0;

  Scalar total_mass() const {
    Scalar s = 0;
    for (const auto& t : tasks) s += t.prior_mass;
    return s;
  }
};

template <typename Scalar>
MixtureState<Scalar> init(const ParamVectorT<Scalar>& prior) {
  MixtureState<Scalar> s{{}, 0, prior, 0};
  s.tasks.push_back({0, prior, Scalar(0)});
  return s;
}

/// CRP prior for the upcoming step: n_i / (t - 1 + alpha) and alpha / (t - 1 + alpha).
template <typename Scalar>
TaskPosterior<Scalar> crp_prior(const MixtureState<Scalar>& state, double alpha) {
  if (!(alpha >= 0.0)) throw ArgumentError("crp_prior: alpha must be >= 0");
  const Scalar denom = Scalar(state.step_count) + Scalar(alpha);
  TaskPosterior<Scalar> out;
  out.probs.reserve(state.tasks.size());
  if (!(denom > 0)) {
    // t = 1 with alpha = 0: no information at all; the step loop never asks.
    throw NumericalError("crp_prior: degenerate prior (no mass and alpha = 0)");
  }
  for (const auto& t : state.tasks) out.probs.push_back(t.prior_mass / denom);
  out.new_task_prob = Scalar(alpha) / denom;
  return out;
}

namespace detail {

/// Normalize log-weights with max-subtraction. -inf entries map to exactly 0.
template <typename Scalar>
std::vector<Scalar> normalize_log_weights(const std::vector<Scalar>& logw) {
  Scalar m = -std::numeric_limits<Scalar>::infinity();
  for (Scalar v : logw) m = std::max(m, v);
  if (!std::isfinite(m)) throw NumericalError("e_step: every task has zero posterior weight");
  std::vector<Scalar> p(logw.size());
  Scalar z = 0;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    p[i] = std::isinf(logw[i]) ? Scalar(0) : std::exp(logw[i] - m);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

template <typename Scalar>
Scalar log_or_neg_inf(Scalar x) {
  return x > 0 ? std::log(x) : -std::numeric_limits<Scalar>::infinity();
}

template <typename Scalar>
TaskPosterior<Scalar> posterior_from_nll(const std::vector<Scalar>& task_nll,
                                         const std::vector<Scalar>& task_weight,
                                         std::optional<Scalar> new_nll, Scalar new_weight) {
  std::vector<Scalar> logw;
  logw.reserve(task_nll.size() + 1);
  for (std::size_t i = 0; i < task_nll.size(); ++i)
    logw.push_back(-task_nll[i] + log_or_neg_inf(task_weight[i]));
  logw.push_back(new_nll ? -*new_nll + log_or_neg_inf(new_weight)
                         : -std::numeric_limits<Scalar>::infinity());
  auto p = normalize_log_weights(logw);
  TaskPosterior<Scalar> out;
  out.new_task_prob = p.back();
  p.pop_back();
  out.probs = std::move(p);
  return out;
}

}  // namespace detail

/// Posterior over existing tasks plus the new-task candidate. Passing no
/// candidate removes the new-task term.
template <typename Scalar>
TaskPosterior<Scalar> e_step(const MixtureState<Scalar>& state, const TransitionWindowT<Scalar>& window,
                             const std::optional<ParamVectorT<Scalar>>& candidate_new, double alpha,
                             const LikelihoodConfig& lik) {
  if (!(alpha >= 0.0)) throw ArgumentError("e_step: alpha must be >= 0");
  std::vector<Scalar> task_nll, task_weight;
  for (const auto& t : state.tasks) {
    task_nll.push_back(nll(t.params, window, lik));
    task_weight.push_back(t.prior_mass);
  }
  std::optional<Scalar> new_nll;
  if (candidate_new) new_nll = nll(*candidate_new, window, lik);
  return detail::posterior_from_nll(task_nll, task_weight, new_nll, Scalar(alpha));
}

/// Weighted SGD step for every task; returns the updated parameters in task
/// order. The state itself is not modified.
template <typename Scalar>
std::vector<ParamVectorT<Scalar>> m_step(const MixtureState<Scalar>& state,
                                         const TransitionWindowT<Scalar>& window,
                                         const TaskPosterior<Scalar>& posterior, double lr,
                                         const LikelihoodConfig& lik) {
  if (posterior.probs.size() != state.tasks.size())
    throw ArgumentError("m_step: posterior not aligned with tasks");
  std::vector<ParamVectorT<Scalar>> out;
  out.reserve(state.tasks.size());
  for (std::size_t i = 0; i < state.tasks.size(); ++i) {
    const auto& p = state.tasks[i].params;
    const double w = static_cast<double>(posterior.probs[i]);
    if (w == 0.0)
      out.push_back(p);
    else
      out.push_back(sgd_step(p, grad_nll(p, window, lik), lr, std::min(1.0, w)));
  }
  return out;
}

/// One full-weight gradient step from the prior on data disjoint from the
/// evaluation window.
template <typename Scalar>
ParamVectorT<Scalar> spawn_candidate(const MixtureState<Scalar>& state,
                                     const TransitionWindowT<Scalar>& recent_data, double lr,
                                     const LikelihoodConfig& lik) {
  return sgd_step(state.prior, grad_nll(state.prior, recent_data, lik), lr, 1.0);
}

template <typename Scalar>
struct StepResult {
  MixtureState<Scalar> state;
  TaskPosterior<Scalar> posterior;  // final posterior of this step
  bool spawned = false;
  std::vector<Scalar> mass_increment;  // what was added to each task's prior_mass
  std::vector<Scalar> updated_nll;     // nll of theta_{t+1}(T_i) on the window
};

/// One time step of online EM. `spawn_data` is the window used to adapt the
/// new-task candidate; without it the candidate is disabled for this step.
template <typename Scalar>
StepResult<Scalar> step(const MixtureState<Scalar>& state, const TransitionWindowT<Scalar>& window,
                        const std::optional<TransitionWindowT<Scalar>>& spawn_data,
                        const MixtureConfig& cfg, const LikelihoodConfig& lik) {
  cfg.validate();
  if (state.tasks.empty()) throw ArgumentError("step: mixture state not initialized");

  StepResult<Scalar> r{state, {}, false, {}, {}};
  auto& next = r.state;
  const MixtureState<Scalar>& pre = state;  // rollback point for every M-step

  auto apply_m = [&](const MixtureState<Scalar>& base, const TaskPosterior<Scalar>& post) {
    auto updated = m_step(base, window, post, cfg.online_lr, lik);
    for (std::size_t i = 0; i < updated.size(); ++i) next.tasks[i].params = std::move(updated[i]);
  };

  if (state.step_count == 0) {
    // No data seen yet: the whole first step belongs to the initial task.
    r.posterior.probs.assign(state.tasks.size(), Scalar(0));
    r.posterior.probs[0] = Scalar(1);
    apply_m(pre, r.posterior);
  } else {
    std::optional<ParamVectorT<Scalar>> candidate;
    if (spawn_data) candidate = spawn_candidate(state, *spawn_data, cfg.spawn_lr, lik);

    for (int it = 0; it < cfg.em_iterations; ++it) {
      // The first E uses theta_t; later ones use the most recent M result.
      r.posterior = e_step(it == 0 ? pre : next, window, candidate, cfg.alpha, lik);
      apply_m(pre, r.posterior);
    }

    bool spawn = candidate.has_value();
    for (Scalar p : r.posterior.probs) spawn = spawn && (r.posterior.new_task_prob > p);

    if (spawn) {
      r.spawned = true;
      const int new_id = static_cast<int>(state.tasks.size());
      MixtureState<Scalar> enlarged = pre;
      enlarged.tasks.push_back({new_id, *candidate, Scalar(0)});
      next.tasks.push_back({new_id, *candidate, Scalar(0)});
      for (int it = 0; it < cfg.em_iterations; ++it) {
        // Old tasks are scored with their tentative theta_{t+1}; the new member
        // carries prior weight alpha in place of its (empty) mass.
        std::vector<Scalar> task_nll, task_weight;
        for (std::size_t i = 0; i < next.tasks.size(); ++i) {
          task_nll.push_back(nll(next.tasks[i].params, window, lik));
          task_weight.push_back(i + 1 == next.tasks.size() ? Scalar(cfg.alpha) : pre.tasks[i].prior_mass);
        }
        r.posterior = detail::posterior_from_nll(task_nll, task_weight, std::optional<Scalar>{}, Scalar(0));
        apply_m(enlarged, r.posterior);
      }
    }
  }

  // Mass accounting: drop the unspawned candidate's share and renormalize.
  Scalar existing = 0;
  for (Scalar p : r.posterior.probs) existing += p;
  r.mass_increment.resize(next.tasks.size());
  for (std::size_t i = 0; i < next.tasks.size(); ++i) {
    r.mass_increment[i] = r.posterior.probs[i] / existing;
    next.tasks[i].prior_mass += r.mass_increment[i];
  }

  r.updated_nll.reserve(next.tasks.size());
  int best = 0;
  for (std::size_t i = 0; i < next.tasks.size(); ++i) {
    r.updated_nll.push_back(nll(next.tasks[i].params, window, lik));
    if (r.updated_nll[i] < r.updated_nll[best]) best = static_cast<int>(i);
  }
  next.current_best = best;
  next.step_count = state.step_count + 1;
  return r;
}

}  // namespace mole
