#include "mole/controller.hpp"

#include <cmath>
#include <iostream>
#include <limits>

namespace mole {

void ControllerConfig::validate() const {
  if (num_candidates < 1) throw ArgumentError("ControllerConfig: num_candidates must be >= 1");
  if (horizon < 1) throw ArgumentError("ControllerConfig: horizon must be >= 1");
  if (!(discount >= 0.0 && discount <= 1.0)) throw ArgumentError("ControllerConfig: discount must lie in [0,1]");
  if (action_low.size() != action_high.size())
    throw ArgumentError("ControllerConfig: action bounds of different sizes");
  if ((action_low.array() > action_high.array()).any())
    throw ArgumentError("ControllerConfig: lower bound above upper bound");
}

std::uint64_t params_hash(const ParamVector& p) {
  return fnv1a(p.values().data(), sizeof(double) * static_cast<std::size_t>(p.size()));
}

namespace {

long enumeration_size(const ControllerConfig& cfg) {
  long total = 1;
  for (int p = 0; p < cfg.horizon; ++p) {
    total *= static_cast<long>(cfg.discrete_actions.size());
    if (total > 10'000'000) throw ArgumentError("plan: enumeration too large");
  }
  return total;
}

int action_dim(const ControllerConfig& cfg) {
  return cfg.discrete_actions.empty() ? static_cast<int>(cfg.action_low.size())
                                      : static_cast<int>(cfg.discrete_actions.front().size());
}

}  // namespace

Eigen::MatrixXd candidate_sequence(const ControllerConfig& cfg, long index, std::uint64_t seed) {
  const int da = action_dim(cfg);
  Eigen::MatrixXd seq(da, cfg.horizon);
  if (!cfg.discrete_actions.empty()) {
    // Base-M digits of the index, first action most significant.
    const long m = static_cast<long>(cfg.discrete_actions.size());
    long rest = index;
    for (int p = cfg.horizon - 1; p >= 0; --p) {
      seq.col(p) = cfg.discrete_actions[static_cast<std::size_t>(rest % m)];
      rest /= m;
    }
    return seq;
  }
  const std::uint64_t stream = derive_seed(seed, static_cast<std::uint64_t>(index));
  for (int p = 0; p < cfg.horizon; ++p)
    for (int j = 0; j < da; ++j) {
      const double u = unit_uniform(splitmix64(stream + static_cast<std::uint64_t>(p * da + j)));
      seq(j, p) = cfg.action_low[j] + (cfg.action_high[j] - cfg.action_low[j]) * u;
    }
  return seq;
}

PlanResult plan(const DynamicsModel& model, const Eigen::VectorXd& state, const RewardFn& reward,
                const ControllerConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int da = action_dim(cfg);
  if (da < 1 || da + state.size() != model.params->arch().input_dim)
    throw ArgumentError("plan: model dimensions do not match state/action dimensions");
  const long n = cfg.discrete_actions.empty() ? cfg.num_candidates : enumeration_size(cfg);

  std::vector<Eigen::MatrixXd> actions(static_cast<std::size_t>(cfg.horizon), Eigen::MatrixXd(da, n));
  for (long i = 0; i < n; ++i) {
    const Eigen::MatrixXd seq = candidate_sequence(cfg, i, seed);
    for (int p = 0; p < cfg.horizon; ++p) actions[static_cast<std::size_t>(p)].col(i) = seq.col(p);
  }

  Eigen::MatrixXd states = state.replicate(1, n);
  Eigen::VectorXd score = Eigen::VectorXd::Zero(n);
  std::vector<bool> dead(static_cast<std::size_t>(n), false);
  long n_dead = 0;
  double disc = 1.0;
  Eigen::VectorXd s_col, a_col;
  for (int p = 0; p < cfg.horizon; ++p) {
    const auto& a = actions[static_cast<std::size_t>(p)];
    states = model.predict(states, a);
    for (long i = 0; i < n; ++i) {
      if (dead[static_cast<std::size_t>(i)]) continue;
      s_col = states.col(i);
      if (!s_col.allFinite()) {
        dead[static_cast<std::size_t>(i)] = true;
        ++n_dead;
        continue;
      }
      a_col = a.col(i);
      score[i] += disc * reward(s_col, a_col);
    }
    disc *= cfg.discount;
  }
  if (n_dead > 0)
    std::clog << "[mole] warning: " << n_dead << " of " << n
              << " candidate rollouts produced non-finite states\n";

  long best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (long i = 0; i < n; ++i) {
    const double s = dead[static_cast<std::size_t>(i)] ? -std::numeric_limits<double>::infinity() : score[i];
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  return {actions[0].col(best), best_score, best};
}

TrialLog run_trial(Learner& learner, const Environment& env, const TaskSchedule& schedule,
                   const ControllerConfig& ctrl, const TrialConfig& trial) {
  ControllerConfig cfg = ctrl;
  if (cfg.action_low.size() == 0 && cfg.discrete_actions.empty()) {
    cfg.action_low = env.action_low();
    cfg.action_high = env.action_high();
  }
  if (trial.length < 0) throw ArgumentError("run_trial: negative trial length");
  if (schedule.total_duration() < trial.length)
    throw ArgumentError("run_trial: schedule shorter than trial length");

  const std::uint64_t plan_seed = derive_seed(trial.seed, "controller");
  const std::uint64_t noise_seed = derive_seed(trial.seed, "env-noise");
  const RewardFn reward = [&env](const Eigen::VectorXd& s, const Eigen::VectorXd& a) { return env.reward(s, a); };

  TrialLog log;
  Eigen::VectorXd state = env.reset(derive_seed(trial.seed, "env-reset"));
  TransitionHistory history(env.state_dim(), env.action_dim());
  LearnerInfo info = learner.initial_info();

  for (long t = 0; t < trial.length; ++t) {
    try {
      if (t > 0) info = learner.update(history);
      const DynamicsModel model = learner.model();
      const PlanResult pr = plan(model, state, reward, cfg, derive_seed(plan_seed, static_cast<std::uint64_t>(t)));
      const std::size_t seg = schedule.segment_at(t);
      const StepOutcome out =
          env.step(state, pr.action, schedule.task_at(t, env), derive_seed(noise_seed, static_cast<std::uint64_t>(t)));
      history.push(state, env.clamp_action(pr.action), out.next_state);

      StepRecord rec;
      rec.t = t;
      rec.reward = out.reward;
      rec.segment = seg;
      rec.task_label = schedule.segments[seg].label;
      rec.nll_of_best = info.nll_of_best;
      rec.posterior = info.posterior;
      rec.new_task_prob = info.new_task_prob;
      rec.chosen_task = info.chosen_task;
      rec.num_tasks = info.num_tasks;
      rec.spawn = info.spawned;
      rec.params_hash = params_hash(*model.params);
      log.steps.push_back(std::move(rec));
      state = out.next_state;
    } catch (const NumericalError& e) {
      throw NumericalError("t=" + std::to_string(t) + ": " + e.what());
    } catch (const ArgumentError& e) {
      throw ArgumentError("t=" + std::to_string(t) + ": " + e.what());
    }
  }
  return log;
}

}  // namespace mole
