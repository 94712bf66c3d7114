#pragma once

// Experiment runner: the five adaptation methods as Learners, the run
// configuration with its key=value file format, and named presets.

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mole/checkpoint.hpp"
#include "mole/controller.hpp"
#include "mole/metatrain.hpp"
#include "mole/mixture.hpp"

namespace mole {

enum class Method { mole, kshot, continued, mbrl_fixed, mbrl_online };

inline constexpr Method kAllMethods[] = {Method::mole, Method::kshot, Method::continued, Method::mbrl_fixed,
                                         Method::mbrl_online};

std::string to_string(Method m);
Method parse_method(const std::string& s);  // ConfigError on unknown names
/// mole, kshot and continued start from the meta-trained prior; the two
/// mbrl methods start from the plainly trained model.
bool uses_meta_prior(Method m);

// ---- learners --------------------------------------------------------------

/// Online EM over a CRP mixture of task models. The update window is the
/// latest `window` transitions; the new-task candidate is adapted on the
/// `window` transitions ending `spawn_window_offset` steps ago (the earliest
/// `window` while fewer exist, disabled until more than `window` are seen).
class MoleLearner final : public Learner {
 public:
  MoleLearner(const Checkpoint& prior, MixtureConfig cfg);
  LearnerInfo update(const TransitionHistory& history) override;
  LearnerInfo initial_info() const override;
  DynamicsModel model() const override;
  const MixtureState<double>& state() const { return state_; }

 private:
  MixtureState<double> state_;
  Normalizer norm_;
  LikelihoodConfig lik_;
  MixtureConfig cfg_;
};

/// Adapt from the prior on the latest k transitions every step, then discard.
class KShotLearner final : public Learner {
 public:
  KShotLearner(const Checkpoint& prior, int k, double lr);
  LearnerInfo update(const TransitionHistory& history) override;
  LearnerInfo initial_info() const override { return {}; }
  DynamicsModel model() const override { return {&current_, &norm_}; }

 private:
  ParamVector prior_, current_;
  Normalizer norm_;
  LikelihoodConfig lik_;
  int k_;
  double lr_;
};

/// One SGD step per time step from the previous parameters.
class ContinuedLearner final : public Learner {
 public:
  ContinuedLearner(const Checkpoint& start, int k, double lr);
  LearnerInfo update(const TransitionHistory& history) override;
  LearnerInfo initial_info() const override { return {}; }
  DynamicsModel model() const override { return {&params_, &norm_}; }
  const ParamVector& params() const { return params_; }

 private:
  ParamVector params_;
  Normalizer norm_;
  LikelihoodConfig lik_;
  int k_;
  double lr_;
};

/// No adaptation.
class FixedLearner final : public Learner {
 public:
  explicit FixedLearner(const Checkpoint& model) : params_(model.params), norm_(model.norm) {}
  LearnerInfo update(const TransitionHistory&) override { return {}; }
  LearnerInfo initial_info() const override { return {}; }
  DynamicsModel model() const override { return {&params_, &norm_}; }

 private:
  ParamVector params_;
  Normalizer norm_;
};

// ---- configuration ---------------------------------------------------------

struct RunConfig {
  std::string preset;
  std::string env = "switchlin";
  std::string schedule = "constant(A)";
  Method method = Method::mole;
  NetArchitecture arch;  // input/output dims come from the environment
  LikelihoodConfig lik;
  MixtureConfig mixture;
  MetaConfig meta;
  ControllerConfig controller;
  long trial_length = 200;
  std::uint64_t seed = 0;
  int num_seeds = 1;
  std::string output_dir = "runs";
  std::string prior_path;     // default <output_dir>/prior.ckpt
  std::string baseline_path;  // default <output_dir>/baseline.ckpt
  std::string dataset_path;   // default <output_dir>/dataset.csv

  /// Checks every sub-config, the environment name and the schedule.
  void validate() const;

  std::string prior_file() const;
  std::string baseline_file() const;
  std::string dataset_file() const;
  MetaTrainSetup meta_setup() const;
};

/// One settable RunConfig field. Keys are shared by the config file, the CLI
/// flags (--key) and the log header echo.
struct ConfigField {
  std::string key;
  std::string help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<ConfigField>& config_fields();
void set_field(RunConfig& cfg, const std::string& key, const std::string& value);

/// `key = value` lines; blank lines and `#` comments ignored. A `preset` key
/// resets every other field to that preset before later lines apply.
void apply_config_text(RunConfig& cfg, std::istream& is, const std::string& source = "config");
void apply_config_file(RunConfig& cfg, const std::string& path);
std::string config_to_text(const RunConfig& cfg);
std::map<std::string, std::string> config_to_map(const RunConfig& cfg);
RunConfig config_from_map(const std::map<std::string, std::string>& kv);

inline constexpr const char* kOutputDirEnv = "MOLE_OUTPUT_DIR";
/// Apply the output-directory environment override, when set.
void apply_env_overrides(RunConfig& cfg);

RunConfig make_preset(const std::string& name);
std::vector<std::string> preset_names();

// ---- running ---------------------------------------------------------------

std::unique_ptr<Learner> make_learner(Method m, const Checkpoint& start, const RunConfig& cfg);

/// One trial of cfg.method from `start` with the given trial seed. The log
/// header echoes the configuration.
TrialLog run_method(const RunConfig& cfg, const Environment& env, const Checkpoint& start, std::uint64_t seed);

/// cfg.num_seeds trials with seeds seed, seed+1, ...; logs written to
/// <output_dir>/<method>_seed<seed>.ndjson (and .csv). Returns the log paths.
std::vector<std::string> run(const RunConfig& cfg);

/// Checkpoint the method starts from, loaded from the configured path.
Checkpoint load_start_checkpoint(const RunConfig& cfg);

}  // namespace mole
