#pragma once

// Desk-scale environments with task-parameterized dynamics.
//
//   slope      SlopePoint    s = (x, v)                  a = force in [-1, 1]
//   pendulum   GainPendulum  s = (cos th, sin th, w)     a = torque in [-1, 1], th = 0 upright
//   arm        CrippleArm    s = (q1, q2, q3, dq1, dq2, dq3)  a = joint torques in [-1, 1]^3
//   switchlin  SwitchLin     s in R^2                    a in [-1, 1]
//
// Physical environments integrate with kick-drift-kick leapfrog at a fixed
// 0.02 s step; one environment step spans `frame_skip` integrator steps.
// Rewards are functions of (next state, action).

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "mole/common.hpp"

namespace mole {

inline constexpr double kIntegratorStep = 0.02;

struct SlopeTask {
  double slope_deg = 0.0;
};
struct GainTask {
  double gain = 1.0;
};
struct CrippleTask {
  unsigned mask = 0;  // bit i set: actuator i outputs zero
};
struct LinearTask {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  double noise_std = 0.05;
};

using TaskParams = std::variant<SlopeTask, GainTask, CrippleTask, LinearTask>;

struct StepOutcome {
  Eigen::VectorXd next_state;
  double reward;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  Eigen::VectorXd action_low() const { return -Eigen::VectorXd::Ones(action_dim()); }
  Eigen::VectorXd action_high() const { return Eigen::VectorXd::Ones(action_dim()); }

  virtual Eigen::VectorXd reset(std::uint64_t seed) const = 0;

  /// Deterministic given (state, action, task, noise_seed). Actions are
  /// clamped to the bounds.
  virtual StepOutcome step(const Eigen::VectorXd& state, const Eigen::VectorXd& action,
                           const TaskParams& task, std::uint64_t noise_seed) const = 0;

  virtual double reward(const Eigen::VectorXd& next_state, const Eigen::VectorXd& action) const = 0;

  /// Throws ArgumentError when the task is of the wrong kind or out of range.
  virtual void validate(const TaskParams& task) const = 0;

  /// Named presets (e.g. "normal", "negative", "crippled").
  virtual TaskParams named_task(const std::string& name) const = 0;
  virtual TaskParams task_from_values(const std::map<std::string, double>& kv) const = 0;
  virtual TaskParams interpolate(const TaskParams& a, const TaskParams& b, double w) const = 0;
  virtual std::string describe(const TaskParams& task) const = 0;

  /// Meta-training task distribution (deliberately narrower than test tasks).
  virtual TaskParams sample_train_task(Rng& rng) const = 0;
  virtual TaskParams sample_test_task(Rng& rng) const = 0;

  Eigen::VectorXd clamp_action(const Eigen::VectorXd& a) const;
};

class SlopePoint final : public Environment {
 public:
  double mass = 1.0, gravity = 9.81, drag = 0.5, max_force = 5.0;
  int frame_skip = 5;
  double velocity_noise = 0.0;

  std::string name() const override { return "slope"; }
  int state_dim() const override { return 2; }
  int action_dim() const override { return 1; }
  Eigen::VectorXd reset(std::uint64_t seed) const override;
  StepOutcome step(const Eigen::VectorXd&, const Eigen::VectorXd&, const TaskParams&,
                   std::uint64_t) const override;
  double reward(const Eigen::VectorXd& next_state, const Eigen::VectorXd& action) const override;
  void validate(const TaskParams& task) const override;
  TaskParams named_task(const std::string& name) const override;
  TaskParams task_from_values(const std::map<std::string, double>& kv) const override;
  TaskParams interpolate(const TaskParams& a, const TaskParams& b, double w) const override;
  std::string describe(const TaskParams& task) const override;
  TaskParams sample_train_task(Rng& rng) const override;
  TaskParams sample_test_task(Rng& rng) const override;
};

class GainPendulum final : public Environment {
 public:
  double mass = 1.0, length = 1.0, gravity = 9.81, damping = 0.1, max_torque = 12.0;
  int frame_skip = 2;
  double velocity_noise = 0.01;

  std::string name() const override { return "pendulum"; }
  int state_dim() const override { return 3; }
  int action_dim() const override { return 1; }
  Eigen::VectorXd reset(std::uint64_t seed) const override;
  StepOutcome step(const Eigen::VectorXd&, const Eigen::VectorXd&, const TaskParams&,
                   std::uint64_t) const override;
  double reward(const Eigen::VectorXd& next_state, const Eigen::VectorXd& action) const override;
  void validate(const TaskParams& task) const override;
  TaskParams named_task(const std::string& name) const override;
  TaskParams task_from_values(const std::map<std::string, double>& kv) const override;
  TaskParams interpolate(const TaskParams& a, const TaskParams& b, double w) const override;
  std::string describe(const TaskParams& task) const override;
  TaskParams sample_train_task(Rng& rng) const override;
  TaskParams sample_test_task(Rng& rng) const override;

  /// Mechanical energy with the potential measured from the lowest point.
  double energy(const Eigen::VectorXd& state) const;
  static Eigen::VectorXd from_angle(double theta, double omega);
};

class CrippleArm final : public Environment {
 public:
  Eigen::Vector3d link_lengths{0.6, 0.5, 0.4};
  Eigen::Vector2d goal{0.8, 0.9};
  double inertia = 0.2, damping = 0.5, max_torque = 2.0, joint_limit = 2.8;
  int frame_skip = 2;

  std::string name() const override { return "arm"; }
  int state_dim() const override { return 6; }
  int action_dim() const override { return 3; }
  Eigen::VectorXd reset(std::uint64_t seed) const override;
  StepOutcome step(const Eigen::VectorXd&, const Eigen::VectorXd&, const TaskParams&,
                   std::uint64_t) const override;
  double reward(const Eigen::VectorXd& next_state, const Eigen::VectorXd& action) const override;
  void validate(const TaskParams& task) const override;
  TaskParams named_task(const std::string& name) const override;
  TaskParams task_from_values(const std::map<std::string, double>& kv) const override;
  TaskParams interpolate(const TaskParams& a, const TaskParams& b, double w) const override;
  std::string describe(const TaskParams& task) const override;
  TaskParams sample_train_task(Rng& rng) const override;
  TaskParams sample_test_task(Rng& rng) const override;

  Eigen::Vector2d end_effector(const Eigen::VectorXd& state) const;
};

class SwitchLin final : public Environment {
 public:
  std::string name() const override { return "switchlin"; }
  int state_dim() const override { return 2; }
  int action_dim() const override { return 1; }
  Eigen::VectorXd reset(std::uint64_t seed) const override;
  StepOutcome step(const Eigen::VectorXd&, const Eigen::VectorXd&, const TaskParams&,
                   std::uint64_t) const override;
  double reward(const Eigen::VectorXd& next_state, const Eigen::VectorXd& action) const override;
  void validate(const TaskParams& task) const override;
  TaskParams named_task(const std::string& name) const override;
  TaskParams task_from_values(const std::map<std::string, double>& kv) const override;
  TaskParams interpolate(const TaskParams& a, const TaskParams& b, double w) const override;
  std::string describe(const TaskParams& task) const override;
  TaskParams sample_train_task(Rng& rng) const override;
  TaskParams sample_test_task(Rng& rng) const override;

  /// A = damping * R(rotation), B = bgain * (cos dir, sin dir).
  static LinearTask make_task(double rotation, double damping, double bgain, double direction,
                              double noise_std = 0.05);
  static Eigen::VectorXd mean(const Eigen::VectorXd& s, const Eigen::VectorXd& a, const LinearTask& task);
  /// Closed-form log N(s' ; A s + B a, noise^2 I).
  static double log_density(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                            const Eigen::VectorXd& next, const LinearTask& task);
};

/// Registry lookup: slope, pendulum, arm, switchlin (and their class names).
std::unique_ptr<Environment> make_environment(const std::string& name);
std::vector<std::string> environment_names();

}  // namespace mole
