#include "mole/harness.hpp"

namespace mole {

std::string to_string(Method m) {
  switch (m) {
    case Method::mole: return "mole";
    case Method::kshot: return "kshot";
    case Method::continued: return "continued";
    case Method::mbrl_fixed: return "mbrl_fixed";
    case Method::mbrl_online: return "mbrl_online";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  for (Method m : kAllMethods)
    if (to_string(m) == s) return m;
  throw ConfigError("unknown method '" + s + "' (expected mole, kshot, continued, mbrl_fixed, mbrl_online)");
}

bool uses_meta_prior(Method m) { return m == Method::mole || m == Method::kshot || m == Method::continued; }

MoleLearner::MoleLearner(const Checkpoint& prior, MixtureConfig cfg)
    : state_(prior.mixture ? *prior.mixture : init(prior.params)),
      norm_(prior.norm),
      lik_(prior.lik),
      cfg_(cfg) {
  cfg_.validate();
}

LearnerInfo MoleLearner::initial_info() const {
  LearnerInfo info;
  info.posterior = std::vector<double>(state_.tasks.size(), 0.0);
  (*info.posterior)[static_cast<std::size_t>(state_.current_best)] = 1.0;
  info.new_task_prob = 0.0;
  info.chosen_task = state_.current_best;
  info.num_tasks = static_cast<int>(state_.tasks.size());
  return info;
}

LearnerInfo MoleLearner::update(const TransitionHistory& history) {
  const std::size_t n = history.size();
  const auto k = static_cast<std::size_t>(cfg_.window);
  const auto off = static_cast<std::size_t>(cfg_.spawn_window_offset);
  const TransitionWindow window = history.latest(k, norm_);
  std::optional<TransitionWindow> spawn_data;
  if (n > k) spawn_data = n < off + k ? history.window(0, k, norm_) : history.window(n - off - k, n - off, norm_);

  StepResult<double> r = step(state_, window, spawn_data, cfg_, lik_);
  state_ = std::move(r.state);

  LearnerInfo info;
  info.posterior = std::move(r.mass_increment);
  info.new_task_prob = r.posterior.new_task_prob;
  info.chosen_task = state_.current_best;
  info.num_tasks = static_cast<int>(state_.tasks.size());
  info.nll_of_best = r.updated_nll[static_cast<std::size_t>(state_.current_best)];
  info.spawned = r.spawned;
  return info;
}

DynamicsModel MoleLearner::model() const {
  return {&state_.tasks[static_cast<std::size_t>(state_.current_best)].params, &norm_};
}

KShotLearner::KShotLearner(const Checkpoint& prior, int k, double lr)
    : prior_(prior.params), current_(prior.params), norm_(prior.norm), lik_(prior.lik), k_(k), lr_(lr) {
  if (k < 1 || !(lr >= 0.0)) throw ArgumentError("KShotLearner: k must be >= 1 and lr >= 0");
}

LearnerInfo KShotLearner::update(const TransitionHistory& history) {
  const TransitionWindow w = history.latest(static_cast<std::size_t>(k_), norm_);
  current_ = inner_adapt(prior_, w, lr_, lik_);
  LearnerInfo info;
  info.nll_of_best = nll(current_, w, lik_);
  return info;
}

ContinuedLearner::ContinuedLearner(const Checkpoint& start, int k, double lr)
    : params_(start.params), norm_(start.norm), lik_(start.lik), k_(k), lr_(lr) {
  if (k < 1 || !(lr >= 0.0)) throw ArgumentError("ContinuedLearner: k must be >= 1 and lr >= 0");
}

LearnerInfo ContinuedLearner::update(const TransitionHistory& history) {
  const TransitionWindow w = history.latest(static_cast<std::size_t>(k_), norm_);
  params_ = sgd_step(params_, grad_nll(params_, w, lik_), lr_, 1.0);
  LearnerInfo info;
  info.nll_of_best = nll(params_, w, lik_);
  return info;
}

std::unique_ptr<Learner> make_learner(Method m, const Checkpoint& start, const RunConfig& cfg) {
  switch (m) {
    case Method::mole: return std::make_unique<MoleLearner>(start, cfg.mixture);
    case Method::kshot: return std::make_unique<KShotLearner>(start, cfg.mixture.window, cfg.meta.inner_lr);
    case Method::continued:
    case Method::mbrl_online:
      return std::make_unique<ContinuedLearner>(start, cfg.mixture.window, cfg.mixture.online_lr);
    case Method::mbrl_fixed: return std::make_unique<FixedLearner>(start);
  }
  throw ArgumentError("make_learner: bad method");
}

}  // namespace mole
