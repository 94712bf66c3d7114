#pragma once

// Random-shooting MPC over a learned dynamics model, and the closed trial
// loop that couples a learner, the planner and an environment.

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

#include "mole/dynamics.hpp"
#include "mole/environments.hpp"
#include "mole/schedule.hpp"
#include "mole/trial_log.hpp"

namespace mole {

struct ControllerConfig {
  int num_candidates = 1000;
  int horizon = 10;
  Eigen::VectorXd action_low;   // empty: take the environment's bounds
  Eigen::VectorXd action_high;
  double discount = 1.0;
  /// Non-empty: score every sequence over this finite action set instead of sampling.
  std::vector<Eigen::VectorXd> discrete_actions;

  void validate() const;
};

/// r(next_state, action).
using RewardFn = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

struct PlanResult {
  Eigen::VectorXd action;  // first action of the best sequence
  double score;            // predicted discounted return of that sequence
  long index;              // candidate index (lowest wins ties)
};

/// Candidate i is drawn from its own stream derived from (seed, i), so the
/// candidate set for N is a prefix of the set for any N' > N.
PlanResult plan(const DynamicsModel& model, const Eigen::VectorXd& state, const RewardFn& reward,
                const ControllerConfig& cfg, std::uint64_t seed);

/// Candidate action sequence i (horizon columns) as sampled by plan().
Eigen::MatrixXd candidate_sequence(const ControllerConfig& cfg, long index, std::uint64_t seed);

/// Information a learner reports after each update, copied into the log.
struct LearnerInfo {
  std::optional<std::vector<double>> posterior;
  std::optional<double> new_task_prob;
  std::optional<int> chosen_task;
  std::optional<int> num_tasks;
  std::optional<double> nll_of_best;
  bool spawned = false;
};

class Learner {
 public:
  virtual ~Learner() = default;
  /// Called after every new transition is appended to `history`.
  virtual LearnerInfo update(const TransitionHistory& history) = 0;
  /// State before any data has been seen.
  virtual LearnerInfo initial_info() const = 0;
  /// Model the planner should use next.
  virtual DynamicsModel model() const = 0;
};

struct TrialConfig {
  long length = 0;
  std::uint64_t seed = 0;
};

/// Per step: update the learner on the newest transition, plan with its
/// current best model, execute, record.
TrialLog run_trial(Learner& learner, const Environment& env, const TaskSchedule& schedule,
                   const ControllerConfig& ctrl, const TrialConfig& trial);

std::uint64_t params_hash(const ParamVector& p);

}  // namespace mole
