#include "mole/metatrain.hpp"

#include <algorithm>

namespace mole {

void MetaConfig::validate() const {
  if (!(inner_lr >= 0.0) || !(outer_lr > 0.0)) throw ArgumentError("MetaConfig: learning rates must be positive");
  if (meta_iterations < 0 || epochs < 0) throw ArgumentError("MetaConfig: iteration counts must be >= 0");
  if (tasks_per_iter < 1 || timesteps_per_iter < 1 || k < 1 || batch_tasks < 1)
    throw ArgumentError("MetaConfig: tasks_per_iter, timesteps_per_iter, k, batch_tasks must be >= 1");
  if (!(hvp_step > 0.0)) throw ArgumentError("MetaConfig: hvp_step must be positive");
}

ParamVector inner_adapt(const ParamVector& theta, const TransitionWindow& train, double eta,
                        const LikelihoodConfig& lik) {
  return sgd_step(theta, grad_nll(theta, train, lik), eta, 1.0);
}

double meta_objective(const ParamVector& theta, const MetaBatch& batch, const MetaConfig& cfg,
                      const LikelihoodConfig& lik) {
  return meta_objective(MlpLoss{theta.arch_ptr(), lik}, theta.values(), batch, cfg.inner_lr);
}

ParamVector meta_gradient(const ParamVector& theta, const MetaBatch& batch, const MetaConfig& cfg,
                          const LikelihoodConfig& lik) {
  return theta.with_values(meta_gradient(MlpLoss{theta.arch_ptr(), lik}, theta.values(), batch, cfg.inner_lr,
                                         cfg.second_order, cfg.hvp_step));
}

MetaBatch sample_meta_batch(const Dataset& data, const Normalizer& norm, int batch_tasks, int k, Rng& rng) {
  std::vector<long> positions;  // valid start positions per trajectory
  std::vector<std::size_t> which;
  long total = 0;
  for (std::size_t i = 0; i < data.trajectories().size(); ++i) {
    const long n = data.trajectories()[i].size() - 2L * k + 1;
    if (n > 0) {
      total += n;
      positions.push_back(total);
      which.push_back(i);
    }
  }
  if (total == 0) throw ArgumentError("sample_meta_batch: no trajectory holds 2k transitions");

  std::uniform_int_distribution<long> pick(0, total - 1);
  MetaBatch batch;
  batch.tasks.reserve(static_cast<std::size_t>(batch_tasks));
  for (int b = 0; b < batch_tasks; ++b) {
    const long r = pick(rng);
    const auto slot = static_cast<std::size_t>(std::upper_bound(positions.begin(), positions.end(), r) -
                                               positions.begin());
    const long start = r - (slot == 0 ? 0 : positions[slot - 1]);
    const auto& tr = data.trajectories()[which[slot]];
    auto cut = [&](long from) {
      Eigen::MatrixXd x(data.state_dim() + data.action_dim(), k);
      x.topRows(data.state_dim()) = tr.states.middleCols(from, k);
      x.bottomRows(data.action_dim()) = tr.actions.middleCols(from, k);
      const Eigen::MatrixXd d = tr.next_states.middleCols(from, k) - tr.states.middleCols(from, k);
      return TransitionWindow{norm.normalize_inputs(x), norm.normalize_deltas(d)};
    };
    batch.tasks.push_back({cut(start), cut(start + k)});
  }
  return batch;
}

long batches_per_epoch(const Dataset& data, const MetaConfig& cfg) {
  return std::max<long>(1, data.num_transitions() / (long(cfg.batch_tasks) * cfg.k));
}

namespace {

template <class GradFn>
ParamVector descend(ParamVector theta, const Dataset& data, const Normalizer& norm, const MetaConfig& cfg,
                    Rng& rng, int epochs, GradFn&& grad) {
  const long nb = batches_per_epoch(data, cfg);
  for (int e = 0; e < epochs; ++e)
    for (long b = 0; b < nb; ++b) {
      const MetaBatch batch = sample_meta_batch(data, norm, cfg.batch_tasks, cfg.k, rng);
      theta = sgd_step(theta, grad(theta, batch), cfg.outer_lr, 1.0);
    }
  return theta;
}

}  // namespace

ParamVector meta_fit(ParamVector theta, const Dataset& data, const Normalizer& norm, const MetaConfig& cfg,
                     const LikelihoodConfig& lik, Rng& rng, int epochs) {
  cfg.validate();
  return descend(std::move(theta), data, norm, cfg, rng, epochs,
                 [&](const ParamVector& th, const MetaBatch& b) { return meta_gradient(th, b, cfg, lik); });
}

ParamVector train_supervised(ParamVector theta, const Dataset& data, const Normalizer& norm,
                             const MetaConfig& cfg, const LikelihoodConfig& lik, Rng& rng, int epochs) {
  cfg.validate();
  return descend(std::move(theta), data, norm, cfg, rng, epochs, [&](const ParamVector& th, const MetaBatch& b) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(th.size());
    for (const auto& t : b.tasks) g += grad_nll(th, t.val, lik).values();
    return th.with_values(std::move(g));
  });
}

namespace {

NetArchitecture arch_for(const Environment& env, NetArchitecture arch) {
  arch.input_dim = env.state_dim() + env.action_dim();
  arch.output_dim = env.state_dim();
  arch.validate();
  return arch;
}

/// One k-shot-adapted MPC rollout.
Trajectory collect_rollout(const Environment& env, const TaskParams& task, const ParamVector& theta,
                           const Normalizer& norm, const MetaTrainSetup& setup, long length,
                           std::uint64_t seed) {
  ControllerConfig ctrl = setup.controller;
  if (ctrl.action_low.size() == 0 && ctrl.discrete_actions.empty()) {
    ctrl.action_low = env.action_low();
    ctrl.action_high = env.action_high();
  }
  const RewardFn reward = [&env](const Eigen::VectorXd& s, const Eigen::VectorXd& a) { return env.reward(s, a); };

  TransitionHistory hist(env.state_dim(), env.action_dim());
  Eigen::VectorXd state = env.reset(derive_seed(seed, "reset"));
  for (long t = 0; t < length; ++t) {
    ParamVector phi = hist.size() == 0
                          ? theta
                          : inner_adapt(theta, hist.latest(static_cast<std::size_t>(setup.meta.k), norm),
                                        setup.meta.inner_lr, setup.lik);
    const PlanResult pr = plan({&phi, &norm}, state, reward, ctrl, derive_seed(seed, static_cast<std::uint64_t>(2 * t)));
    const Eigen::VectorXd a = env.clamp_action(pr.action);
    const StepOutcome out = env.step(state, a, task, derive_seed(seed, static_cast<std::uint64_t>(2 * t + 1)));
    hist.push(state, a, out.next_state);
    state = out.next_state;
  }
  Trajectory tr;
  tr.env = env.name();
  tr.task_tag = env.describe(task);
  const auto T = static_cast<Eigen::Index>(hist.size());
  tr.states.resize(env.state_dim(), T);
  tr.actions.resize(env.action_dim(), T);
  tr.next_states.resize(env.state_dim(), T);
  for (Eigen::Index j = 0; j < T; ++j) {
    tr.states.col(j) = hist.state(static_cast<std::size_t>(j));
    tr.actions.col(j) = hist.action(static_cast<std::size_t>(j));
    tr.next_states.col(j) = hist.next_state(static_cast<std::size_t>(j));
  }
  return tr;
}

int max_iteration(const Dataset& data) {
  int m = -1;
  for (const auto& t : data.trajectories()) m = std::max(m, t.iteration);
  return m;
}

}  // namespace

MetaTrainResult meta_train(const Environment& env, const MetaTrainSetup& setup, std::uint64_t seed) {
  setup.meta.validate();
  setup.lik.validate();
  const NetArchitecture arch = arch_for(env, setup.arch);
  Rng init_rng(derive_seed(seed, "init"));
  Rng fit_rng(derive_seed(seed, "meta-fit"));
  Rng task_rng(derive_seed(seed, "tasks"));

  ParamVector theta = ParamVector::random(arch, init_rng);
  Normalizer norm = Normalizer::identity(arch.input_dim, arch.output_dim);
  Dataset data(env.state_dim(), env.action_dim());
  const long rollout_len = std::max(1, setup.meta.timesteps_per_iter / setup.meta.tasks_per_iter);

  long episode = 0;
  for (int it = 0; it < setup.meta.meta_iterations; ++it) {
    for (int j = 0; j < setup.meta.tasks_per_iter; ++j, ++episode) {
      const TaskParams task = env.sample_train_task(task_rng);
      try {
        Trajectory tr = collect_rollout(env, task, theta, norm, setup, rollout_len,
                                        derive_seed(derive_seed(seed, "collect"), static_cast<std::uint64_t>(episode)));
        tr.episode = episode;
        tr.iteration = it;
        data.append(std::move(tr));
      } catch (const NumericalError& e) {
        throw NumericalError("meta_train: iteration " + std::to_string(it) + ", episode " +
                             std::to_string(episode) + " (" + env.describe(task) + "): " + e.what());
      }
    }
    norm = data.fit_normalizer();
    theta = meta_fit(std::move(theta), data, norm, setup.meta, setup.lik, fit_rng, setup.meta.epochs);
  }
  return {Checkpoint{theta, setup.lik, norm, std::nullopt}, std::move(data)};
}

namespace {

template <class Fit>
Checkpoint replay_schedule(const Dataset& data, const MetaTrainSetup& setup, std::uint64_t seed, Fit&& fit) {
  setup.meta.validate();
  if (data.empty()) throw ConfigError("training requires a non-empty dataset");
  NetArchitecture arch = setup.arch;
  arch.input_dim = data.state_dim() + data.action_dim();
  arch.output_dim = data.state_dim();
  Rng init_rng(derive_seed(seed, "init"));
  Rng fit_rng(derive_seed(seed, "meta-fit"));
  ParamVector theta = ParamVector::random(arch, init_rng);
  Normalizer norm = Normalizer::identity(arch.input_dim, arch.output_dim);
  for (int it = 0; it <= max_iteration(data); ++it) {
    const Dataset seen = data.up_to_iteration(it);
    if (seen.empty()) continue;
    norm = seen.fit_normalizer();
    theta = fit(std::move(theta), seen, norm, fit_rng);
  }
  return Checkpoint{theta, setup.lik, norm, std::nullopt};
}

}  // namespace

Checkpoint train_baseline(const Dataset& data, const MetaTrainSetup& setup, std::uint64_t seed) {
  return replay_schedule(data, setup, seed, [&](ParamVector th, const Dataset& d, const Normalizer& n, Rng& rng) {
    return train_supervised(std::move(th), d, n, setup.meta, setup.lik, rng, setup.meta.epochs);
  });
}

Checkpoint meta_fit_offline(const Dataset& data, const MetaTrainSetup& setup, std::uint64_t seed) {
  return replay_schedule(data, setup, seed, [&](ParamVector th, const Dataset& d, const Normalizer& n, Rng& rng) {
    return meta_fit(std::move(th), d, n, setup.meta, setup.lik, rng, setup.meta.epochs);
  });
}

}  // namespace mole
