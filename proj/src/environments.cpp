#include "mole/environments.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace mole {
namespace {

constexpr double kPi = std::numbers::pi;

double value_or(const std::map<std::string, double>& kv, const std::string& key, double fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

void reject_unknown_keys(const std::map<std::string, double>& kv, std::initializer_list<const char*> known,
                         const std::string& env) {
  for (const auto& [k, v] : kv) {
    bool ok = false;
    for (const char* name : known) ok = ok || k == name;
    if (!ok) throw ArgumentError(env + ": unknown task parameter '" + k + "'");
  }
}

template <typename T>
const T& expect(const TaskParams& task, const char* env) {
  if (const T* t = std::get_if<T>(&task)) return *t;
  throw ArgumentError(std::string(env) + ": task parameters of the wrong kind");
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double gaussian(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

/// Kick-drift-kick leapfrog for q'' = accel(q, v).
template <typename Accel>
void leapfrog(Eigen::Ref<Eigen::VectorXd> q, Eigen::Ref<Eigen::VectorXd> v, double dt, Accel&& accel) {
  v += 0.5 * dt * accel(q, v);
  q += dt * v;
  v += 0.5 * dt * accel(q, v);
}

}  // namespace

Eigen::VectorXd Environment::clamp_action(const Eigen::VectorXd& a) const {
  if (a.size() != action_dim()) throw ArgumentError(name() + ": action dimension mismatch");
  if (!a.allFinite()) throw ArgumentError(name() + ": non-finite action");
  return a.cwiseMax(action_low()).cwiseMin(action_high());
}

// ---------------------------------------------------------------- SlopePoint

Eigen::VectorXd SlopePoint::reset(std::uint64_t) const { return Eigen::Vector2d::Zero(); }

StepOutcome SlopePoint::step(const Eigen::VectorXd& state, const Eigen::VectorXd& action,
                             const TaskParams& task, std::uint64_t noise_seed) const {
  validate(task);
  if (state.size() != 2 || !state.allFinite()) throw ArgumentError("slope: invalid state");
  const double phi = std::get<SlopeTask>(task).slope_deg * kPi / 180.0;
  const double force = max_force * clamp_action(action)[0];
  Eigen::VectorXd q = state.head(1), v = state.tail(1);
  auto accel = [&](const auto&, const auto& vel) {
    return Eigen::VectorXd::Constant(1, (force - mass * gravity * std::sin(phi) - drag * vel[0]) / mass);
  };
  for (int i = 0; i < frame_skip; ++i) leapfrog(q, v, kIntegratorStep, accel);
  if (velocity_noise > 0) {
    Rng rng(noise_seed);
    v[0] += velocity_noise * gaussian(rng);
  }
  Eigen::VectorXd next(2);
  next << q[0], v[0];
  return {next, reward(next, action)};
}

double SlopePoint::reward(const Eigen::VectorXd& next_state, const Eigen::VectorXd&) const {
  return next_state[1];
}

void SlopePoint::validate(const TaskParams& task) const {
  const auto& t = expect<SlopeTask>(task, "slope");
  if (!(std::abs(t.slope_deg) <= 30.0)) throw ArgumentError("slope: |slope_deg| must be <= 30");
}

TaskParams SlopePoint::named_task(const std::string& n) const {
  if (n == "flat" || n == "normal") return SlopeTask{0.0};
  if (n == "uphill") return SlopeTask{10.0};
  if (n == "downhill") return SlopeTask{-10.0};
  if (n == "steep_uphill") return SlopeTask{20.0};
  if (n == "steep_downhill") return SlopeTask{-20.0};
  throw ArgumentError("slope: unknown task '" + n + "'");
}

TaskParams SlopePoint::task_from_values(const std::map<std::string, double>& kv) const {
  reject_unknown_keys(kv, {"slope"}, "slope");
  TaskParams t = SlopeTask{value_or(kv, "slope", 0.0)};
  validate(t);
  return t;
}

TaskParams SlopePoint::interpolate(const TaskParams& a, const TaskParams& b, double w) const {
  const auto& x = expect<SlopeTask>(a, "slope");
  const auto& y = expect<SlopeTask>(b, "slope");
  return SlopeTask{(1 - w) * x.slope_deg + w * y.slope_deg};
}

std::string SlopePoint::describe(const TaskParams& task) const {
  return fmt("slope=%g", expect<SlopeTask>(task, "slope").slope_deg);
}

TaskParams SlopePoint::sample_train_task(Rng& rng) const {
  return SlopeTask{std::uniform_real_distribution<double>(-5.0, 5.0)(rng)};
}

TaskParams SlopePoint::sample_test_task(Rng& rng) const {
  const double mag = std::uniform_real_distribution<double>(10.0, 20.0)(rng);
  return SlopeTask{std::bernoulli_distribution(0.5)(rng) ? mag : -mag};
}

// -------------------------------------------------------------- GainPendulum

Eigen::VectorXd GainPendulum::from_angle(double theta, double omega) {
  Eigen::VectorXd s(3);
  s << std::cos(theta), std::sin(theta), omega;
  return s;
}

Eigen::VectorXd GainPendulum::reset(std::uint64_t seed) const {
  Rng rng(seed);
  return from_angle(kPi + std::uniform_real_distribution<double>(-0.1, 0.1)(rng), 0.0);
}

StepOutcome GainPendulum::step(const Eigen::VectorXd& state, const Eigen::VectorXd& action,
                               const TaskParams& task, std::uint64_t noise_seed) const {
  validate(task);
  if (state.size() != 3 || !state.allFinite()) throw ArgumentError("pendulum: invalid state");
  const double gain = std::get<GainTask>(task).gain;
  const double torque = gain * max_torque * clamp_action(action)[0];
  const double ml2 = mass * length * length;
  Eigen::VectorXd q = Eigen::VectorXd::Constant(1, std::atan2(state[1], state[0]));
  Eigen::VectorXd v = state.tail(1);
  auto accel = [&](const auto& th, const auto& w) {
    return Eigen::VectorXd::Constant(
        1, (gravity / length) * std::sin(th[0]) + (torque - damping * w[0]) / ml2);
  };
  for (int i = 0; i < frame_skip; ++i) leapfrog(q, v, kIntegratorStep, accel);
  if (velocity_noise > 0) {
    Rng rng(noise_seed);
    v[0] += velocity_noise * gaussian(rng);
  }
  const Eigen::VectorXd next = from_angle(q[0], v[0]);
  return {next, reward(next, action)};
}

double GainPendulum::reward(const Eigen::VectorXd& next_state, const Eigen::VectorXd&) const {
  return 0.5 * (1.0 + std::clamp(next_state[0], -1.0, 1.0));
}

double GainPendulum::energy(const Eigen::VectorXd& s) const {
  return 0.5 * mass * length * length * s[2] * s[2] + mass * gravity * length * (1.0 + s[0]);
}

void GainPendulum::validate(const TaskParams& task) const {
  const auto& t = expect<GainTask>(task, "pendulum");
  if (!(std::abs(t.gain) <= 1.5)) throw ArgumentError("pendulum: gain must lie in [-1.5, 1.5]");
}

TaskParams GainPendulum::named_task(const std::string& n) const {
  if (n == "normal") return GainTask{1.0};
  if (n == "negative" || n == "sign_negative") return GainTask{-1.0};
  if (n == "weak") return GainTask{0.5};
  if (n == "strong_negative") return GainTask{-1.5};
  if (n == "crippled" || n == "off") return GainTask{0.0};
  throw ArgumentError("pendulum: unknown task '" + n + "'");
}

TaskParams GainPendulum::task_from_values(const std::map<std::string, double>& kv) const {
  reject_unknown_keys(kv, {"gain"}, "pendulum");
  TaskParams t = GainTask{value_or(kv, "gain", 1.0)};
  validate(t);
  return t;
}

TaskParams GainPendulum::interpolate(const TaskParams& a, const TaskParams& b, double w) const {
  const auto& x = expect<GainTask>(a, "pendulum");
  const auto& y = expect<GainTask>(b, "pendulum");
  return GainTask{(1 - w) * x.gain + w * y.gain};
}

std::string GainPendulum::describe(const TaskParams& task) const {
  return fmt("gain=%g", expect<GainTask>(task, "pendulum").gain);
}

// Training: magnitude malfunctions of either polarity, |gain| in [0.6, 1.2].
TaskParams GainPendulum::sample_train_task(Rng& rng) const {
  const double mag = std::uniform_real_distribution<double>(0.6, 1.2)(rng);
  return GainTask{std::bernoulli_distribution(0.5)(rng) ? mag : -mag};
}

TaskParams GainPendulum::sample_test_task(Rng& rng) const {
  const double mag = std::uniform_real_distribution<double>(1.2, 1.5)(rng);
  return GainTask{std::bernoulli_distribution(0.5)(rng) ? mag : -mag};
}

// ---------------------------------------------------------------- CrippleArm

Eigen::VectorXd CrippleArm::reset(std::uint64_t) const { return Eigen::VectorXd::Zero(6); }

StepOutcome CrippleArm::step(const Eigen::VectorXd& state, const Eigen::VectorXd& action,
                             const TaskParams& task, std::uint64_t) const {
  validate(task);
  if (state.size() != 6 || !state.allFinite()) throw ArgumentError("arm: invalid state");
  const unsigned mask = std::get<CrippleTask>(task).mask;
  Eigen::VectorXd tau = max_torque * clamp_action(action);
  for (int i = 0; i < 3; ++i)
    if (mask & (1u << i)) tau[i] = 0.0;
  Eigen::VectorXd q = state.head(3), v = state.tail(3);
  auto accel = [&](const auto&, const auto& w) -> Eigen::VectorXd { return (tau - damping * w) / inertia; };
  for (int i = 0; i < frame_skip; ++i) {
    leapfrog(q, v, kIntegratorStep, accel);
    for (int j = 0; j < 3; ++j) {
      if (std::abs(q[j]) > joint_limit) {
        q[j] = std::copysign(joint_limit, q[j]);
        v[j] = 0.0;
      }
    }
  }
  Eigen::VectorXd next(6);
  next << q, v;
  return {next, reward(next, action)};
}

Eigen::Vector2d CrippleArm::end_effector(const Eigen::VectorXd& s) const {
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  double angle = 0.0;
  for (int i = 0; i < 3; ++i) {
    angle += s[i];
    p += link_lengths[i] * Eigen::Vector2d(std::cos(angle), std::sin(angle));
  }
  return p;
}

double CrippleArm::reward(const Eigen::VectorXd& next_state, const Eigen::VectorXd&) const {
  return -(end_effector(next_state) - goal).norm();
}

void CrippleArm::validate(const TaskParams& task) const {
  const auto& t = expect<CrippleTask>(task, "arm");
  if (t.mask > 7u) throw ArgumentError("arm: crippled mask must be within 3 bits");
}

TaskParams CrippleArm::named_task(const std::string& n) const {
  if (n == "normal") return CrippleTask{0};
  if (n == "crippled") return CrippleTask{0b010};
  if (n == "crippled_base") return CrippleTask{0b001};
  if (n == "crippled_two") return CrippleTask{0b011};
  throw ArgumentError("arm: unknown task '" + n + "'");
}

TaskParams CrippleArm::task_from_values(const std::map<std::string, double>& kv) const {
  reject_unknown_keys(kv, {"mask"}, "arm");
  const double m = value_or(kv, "mask", 0.0);
  if (m < 0 || m != std::floor(m)) throw ArgumentError("arm: mask must be a non-negative integer");
  TaskParams t = CrippleTask{static_cast<unsigned>(m)};
  validate(t);
  return t;
}

TaskParams CrippleArm::interpolate(const TaskParams& a, const TaskParams& b, double w) const {
  // Masks are discrete: switch halfway.
  return w < 0.5 ? a : b;
}

std::string CrippleArm::describe(const TaskParams& task) const {
  return "mask=" + std::to_string(expect<CrippleTask>(task, "arm").mask);
}

// Training: at most one crippled joint; testing: any non-empty mask.
TaskParams CrippleArm::sample_train_task(Rng& rng) const {
  const int k = std::uniform_int_distribution<int>(0, 3)(rng);
  return CrippleTask{k == 3 ? 0u : (1u << k)};
}

TaskParams CrippleArm::sample_test_task(Rng& rng) const {
  return CrippleTask{static_cast<unsigned>(std::uniform_int_distribution<int>(1, 7)(rng))};
}

// ----------------------------------------------------------------- SwitchLin

LinearTask SwitchLin::make_task(double rotation, double damping, double bgain, double direction,
                                double noise_std) {
  LinearTask t;
  t.A.resize(2, 2);
  t.A << std::cos(rotation), -std::sin(rotation), std::sin(rotation), std::cos(rotation);
  t.A *= damping;
  t.B.resize(2, 1);
  t.B << bgain * std::cos(direction), bgain * std::sin(direction);
  t.noise_std = noise_std;
  return t;
}

Eigen::VectorXd SwitchLin::reset(std::uint64_t seed) const {
  Rng rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Eigen::VectorXd s(2);
  s[0] = U(rng);
  s[1] = U(rng);
  return s;
}

Eigen::VectorXd SwitchLin::mean(const Eigen::VectorXd& s, const Eigen::VectorXd& a, const LinearTask& t) {
  return t.A * s + t.B * a;
}

double SwitchLin::log_density(const Eigen::VectorXd& s, const Eigen::VectorXd& a, const Eigen::VectorXd& next,
                              const LinearTask& t) {
  const double var = t.noise_std * t.noise_std;
  const Eigen::VectorXd r = next - mean(s, a, t);
  return -0.5 * r.squaredNorm() / var - 0.5 * static_cast<double>(r.size()) * std::log(2.0 * kPi * var);
}

StepOutcome SwitchLin::step(const Eigen::VectorXd& state, const Eigen::VectorXd& action,
                            const TaskParams& task, std::uint64_t noise_seed) const {
  validate(task);
  if (state.size() != 2 || !state.allFinite()) throw ArgumentError("switchlin: invalid state");
  const auto& t = std::get<LinearTask>(task);
  Eigen::VectorXd next = mean(state, clamp_action(action), t);
  Rng rng(noise_seed);
  for (Eigen::Index i = 0; i < next.size(); ++i) next[i] += t.noise_std * gaussian(rng);
  return {next, reward(next, action)};
}

double SwitchLin::reward(const Eigen::VectorXd& next_state, const Eigen::VectorXd&) const {
  return -next_state.squaredNorm();
}

void SwitchLin::validate(const TaskParams& task) const {
  const auto& t = expect<LinearTask>(task, "switchlin");
  if (t.A.rows() != 2 || t.A.cols() != 2 || t.B.rows() != 2 || t.B.cols() != 1)
    throw ArgumentError("switchlin: A must be 2x2 and B 2x1");
  if (!t.A.allFinite() || !t.B.allFinite() || !(t.noise_std > 0.0))
    throw ArgumentError("switchlin: non-finite matrices or non-positive noise");
}

TaskParams SwitchLin::named_task(const std::string& n) const {
  if (n == "A" || n == "normal") return make_task(0.2, 0.95, 0.5, kPi / 2);
  if (n == "B" || n == "flipped") return make_task(-0.2, 0.95, -0.5, kPi / 2);
  throw ArgumentError("switchlin: unknown task '" + n + "'");
}

TaskParams SwitchLin::task_from_values(const std::map<std::string, double>& kv) const {
  reject_unknown_keys(kv, {"rotation", "damping", "bgain", "direction", "noise"}, "switchlin");
  TaskParams t = make_task(value_or(kv, "rotation", 0.2), value_or(kv, "damping", 0.95),
                           value_or(kv, "bgain", 0.5), value_or(kv, "direction", kPi / 2),
                           value_or(kv, "noise", 0.05));
  validate(t);
  return t;
}

TaskParams SwitchLin::interpolate(const TaskParams& a, const TaskParams& b, double w) const {
  const auto& x = expect<LinearTask>(a, "switchlin");
  const auto& y = expect<LinearTask>(b, "switchlin");
  return LinearTask{(1 - w) * x.A + w * y.A, (1 - w) * x.B + w * y.B,
                    (1 - w) * x.noise_std + w * y.noise_std};
}

std::string SwitchLin::describe(const TaskParams& task) const {
  const auto& t = expect<LinearTask>(task, "switchlin");
  char buf[160];
  std::snprintf(buf, sizeof buf, "A=[%.3g,%.3g;%.3g,%.3g] B=[%.3g;%.3g]", t.A(0, 0), t.A(0, 1), t.A(1, 0),
                t.A(1, 1), t.B(0, 0), t.B(1, 0));
  return buf;
}

TaskParams SwitchLin::sample_train_task(Rng& rng) const {
  std::uniform_real_distribution<double> rot(-0.3, 0.3), damp(0.85, 0.98), mag(0.3, 0.7), dir(0.0, kPi);
  const double r = rot(rng), d = damp(rng), m = mag(rng), di = dir(rng);
  const bool flip = std::bernoulli_distribution(0.5)(rng);
  return make_task(r, d, flip ? -m : m, di);
}

TaskParams SwitchLin::sample_test_task(Rng& rng) const {
  std::uniform_real_distribution<double> rot(-0.4, 0.4), damp(0.8, 0.99), mag(0.3, 0.9), dir(0.0, kPi);
  const double r = rot(rng), d = damp(rng), m = mag(rng), di = dir(rng);
  const bool flip = std::bernoulli_distribution(0.5)(rng);
  return make_task(r, d, flip ? -m : m, di);
}

// ------------------------------------------------------------------ registry

std::unique_ptr<Environment> make_environment(const std::string& name) {
  if (name == "slope" || name == "SlopePoint") return std::make_unique<SlopePoint>();
  if (name == "pendulum" || name == "GainPendulum") return std::make_unique<GainPendulum>();
  if (name == "arm" || name == "CrippleArm") return std::make_unique<CrippleArm>();
  if (name == "switchlin" || name == "SwitchLin") return std::make_unique<SwitchLin>();
  throw ConfigError("unknown environment '" + name + "'");
}

std::vector<std::string> environment_names() { return {"slope", "pendulum", "arm", "switchlin"}; }

}  // namespace mole
