#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>

#include "mole/harness.hpp"
#include "mole/schedule.hpp"

namespace mole {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string fmt(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const char* b = v.data();
  if (!v.empty() && v[0] == '+') ++b;
  auto [p, ec] = std::from_chars(b, v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  const long x = to_long(key, v);
  if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(key + ": out of range");
  return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

Eigen::VectorXd to_vec(const std::string& key, const std::string& v) {
  if (trim(v).empty()) return {};
  const auto parts = split(v, ',');
  Eigen::VectorXd out(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) out[static_cast<Eigen::Index>(i)] = to_double(key, parts[i]);
  return out;
}

std::string fmt_vec(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

template <class T>
ConfigField num_field(std::string key, std::string help, T RunConfig::*member) {
  return {key, std::move(help),
          [key, member](RunConfig& c, const std::string& v) {
            if constexpr (std::is_same_v<T, double>) c.*member = to_double(key, v);
            else c.*member = static_cast<T>(to_long(key, v));
          },
          [member](const RunConfig& c) {
            if constexpr (std::is_same_v<T, double>) return fmt(c.*member);
            else return std::to_string(c.*member);
          }};
}

#define MOLE_SUB_DOUBLE(KEY, HELP, SUB, MEM)                                                    \
  ConfigField{KEY, HELP, [](RunConfig& c, const std::string& v) { c.SUB.MEM = to_double(KEY, v); }, \
              [](const RunConfig& c) { return fmt(c.SUB.MEM); }}
#define MOLE_SUB_INT(KEY, HELP, SUB, MEM)                                                    \
  ConfigField{KEY, HELP, [](RunConfig& c, const std::string& v) { c.SUB.MEM = to_int(KEY, v); }, \
              [](const RunConfig& c) { return std::to_string(c.SUB.MEM); }}

std::vector<ConfigField> build_fields() {
  std::vector<ConfigField> f;
  f.push_back({"preset", "named preset applied before any other field",
               [](RunConfig& c, const std::string& v) {
                 if (!v.empty()) c = make_preset(v);
               },
               [](const RunConfig& c) { return c.preset; }});
  f.push_back({"env", "environment name (slope, pendulum, arm, switchlin)",
               [](RunConfig& c, const std::string& v) { c.env = v; }, [](const RunConfig& c) { return c.env; }});
  f.push_back({"schedule", "task schedule DSL string",
               [](RunConfig& c, const std::string& v) { c.schedule = v; },
               [](const RunConfig& c) { return c.schedule; }});
  f.push_back({"method", "mole, kshot, continued, mbrl_fixed or mbrl_online",
               [](RunConfig& c, const std::string& v) { c.method = parse_method(v); },
               [](const RunConfig& c) { return to_string(c.method); }});
  f.push_back({"trial_length", "time steps per trial",
               [](RunConfig& c, const std::string& v) { c.trial_length = to_long("trial_length", v); },
               [](const RunConfig& c) { return std::to_string(c.trial_length); }});
  f.push_back({"seed", "root seed",
               [](RunConfig& c, const std::string& v) {
                 if (v.empty() || v[0] == '-') throw ConfigError("seed: expected a non-negative integer");
                 std::uint64_t s = 0;
                 auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
                 if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("seed: bad value '" + v + "'");
                 c.seed = s;
               },
               [](const RunConfig& c) { return std::to_string(c.seed); }});
  f.push_back(num_field<int>("num_seeds", "number of consecutive seeds to run", &RunConfig::num_seeds));
  f.push_back({"output_dir", "directory for logs and artifacts (overridden by MOLE_OUTPUT_DIR)",
               [](RunConfig& c, const std::string& v) { c.output_dir = v; },
               [](const RunConfig& c) { return c.output_dir; }});
  f.push_back({"prior", "meta-trained prior checkpoint path",
               [](RunConfig& c, const std::string& v) { c.prior_path = v; },
               [](const RunConfig& c) { return c.prior_path; }});
  f.push_back({"baseline", "plainly trained checkpoint path",
               [](RunConfig& c, const std::string& v) { c.baseline_path = v; },
               [](const RunConfig& c) { return c.baseline_path; }});
  f.push_back({"dataset", "meta-training dataset path",
               [](RunConfig& c, const std::string& v) { c.dataset_path = v; },
               [](const RunConfig& c) { return c.dataset_path; }});

  f.push_back({"net.hidden", "hidden layer widths, comma separated",
               [](RunConfig& c, const std::string& v) {
                 c.arch.hidden_dims.clear();
                 if (!trim(v).empty())
                   for (const auto& p : split(v, ',')) c.arch.hidden_dims.push_back(to_int("net.hidden", p));
               },
               [](const RunConfig& c) {
                 std::string s;
                 for (std::size_t i = 0; i < c.arch.hidden_dims.size(); ++i)
                   s += (i ? "," : "") + std::to_string(c.arch.hidden_dims[i]);
                 return s;
               }});
  f.push_back(MOLE_SUB_DOUBLE("lik.variance", "Gaussian output variance (normalized units)", lik, variance));

  f.push_back(MOLE_SUB_DOUBLE("mixture.alpha", "CRP concentration", mixture, alpha));
  f.push_back(MOLE_SUB_DOUBLE("mixture.online_lr", "online M-step learning rate", mixture, online_lr));
  f.push_back(MOLE_SUB_DOUBLE("mixture.spawn_lr", "step size of the new-task candidate", mixture, spawn_lr));
  f.push_back(MOLE_SUB_INT("mixture.em_iterations", "E/M passes per step", mixture, em_iterations));
  f.push_back(MOLE_SUB_INT("mixture.window", "update window K", mixture, window));
  f.push_back(MOLE_SUB_INT("mixture.spawn_window_offset", "steps between candidate data and now", mixture,
                           spawn_window_offset));

  f.push_back(MOLE_SUB_DOUBLE("meta.inner_lr", "MAML inner learning rate (also used for k-shot)", meta, inner_lr));
  f.push_back(MOLE_SUB_DOUBLE("meta.outer_lr", "meta learning rate", meta, outer_lr));
  f.push_back(MOLE_SUB_INT("meta.iterations", "collection/meta-fit rounds", meta, meta_iterations));
  f.push_back(MOLE_SUB_INT("meta.epochs", "passes over the data per round", meta, epochs));
  f.push_back(MOLE_SUB_INT("meta.tasks_per_iter", "rollouts (one task each) per round", meta, tasks_per_iter));
  f.push_back(MOLE_SUB_INT("meta.timesteps_per_iter", "transitions collected per round", meta, timesteps_per_iter));
  f.push_back(MOLE_SUB_INT("meta.k", "train/validation window length", meta, k));
  f.push_back(MOLE_SUB_INT("meta.batch_tasks", "windows per meta-batch", meta, batch_tasks));
  f.push_back({"meta.second_order", "exact (finite-difference HVP) meta-gradient",
               [](RunConfig& c, const std::string& v) { c.meta.second_order = to_bool("meta.second_order", v); },
               [](const RunConfig& c) { return std::string(c.meta.second_order ? "true" : "false"); }});
  f.push_back(MOLE_SUB_DOUBLE("meta.hvp_step", "finite-difference step of the HVP", meta, hvp_step));

  f.push_back(MOLE_SUB_INT("controller.num_candidates", "random-shooting candidates N", controller, num_candidates));
  f.push_back(MOLE_SUB_INT("controller.horizon", "planning horizon H", controller, horizon));
  f.push_back(MOLE_SUB_DOUBLE("controller.discount", "per-step discount of the plan score", controller, discount));
  f.push_back({"controller.action_low", "lower action bounds (empty: environment bounds)",
               [](RunConfig& c, const std::string& v) { c.controller.action_low = to_vec("controller.action_low", v); },
               [](const RunConfig& c) { return fmt_vec(c.controller.action_low); }});
  f.push_back({"controller.action_high", "upper action bounds (empty: environment bounds)",
               [](RunConfig& c, const std::string& v) {
                 c.controller.action_high = to_vec("controller.action_high", v);
               },
               [](const RunConfig& c) { return fmt_vec(c.controller.action_high); }});
  f.push_back({"controller.discrete_actions", "finite action set to enumerate, vectors separated by ';'",
               [](RunConfig& c, const std::string& v) {
                 c.controller.discrete_actions.clear();
                 if (!trim(v).empty())
                   for (const auto& p : split(v, ';'))
                     c.controller.discrete_actions.push_back(to_vec("controller.discrete_actions", p));
               },
               [](const RunConfig& c) {
                 std::string s;
                 for (std::size_t i = 0; i < c.controller.discrete_actions.size(); ++i)
                   s += (i ? ";" : "") + fmt_vec(c.controller.discrete_actions[i]);
                 return s;
               }});
  return f;
}

#undef MOLE_SUB_DOUBLE
#undef MOLE_SUB_INT

std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

}  // namespace

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = build_fields();
  return fields;
}

void set_field(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : config_fields())
    if (f.key == key) {
      try {
        f.set(cfg, value);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        throw ConfigError(key + ": " + e.what());
      }
      return;
    }
  throw ConfigError("unknown config key '" + key + "'");
}

void apply_config_text(RunConfig& cfg, std::istream& is, const std::string& source) {
  std::string line;
  long lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    try {
      set_field(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file: " + path);
  apply_config_text(cfg, is, path);
}

std::map<std::string, std::string> config_to_map(const RunConfig& cfg) {
  std::map<std::string, std::string> m;
  for (const auto& f : config_fields()) m[f.key] = f.get(cfg);
  return m;
}

std::string config_to_text(const RunConfig& cfg) {
  std::string s;
  for (const auto& f : config_fields()) s += f.key + " = " + f.get(cfg) + "\n";
  return s;
}

RunConfig config_from_map(const std::map<std::string, std::string>& kv) {
  RunConfig cfg;
  if (auto it = kv.find("preset"); it != kv.end()) set_field(cfg, "preset", it->second);
  for (const auto& [k, v] : kv)
    if (k != "preset") set_field(cfg, k, v);
  return cfg;
}

void apply_env_overrides(RunConfig& cfg) {
  if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) cfg.output_dir = dir;
}

void RunConfig::validate() const {
  try {
    for (int h : arch.hidden_dims)
      if (h < 1) throw ArgumentError("net.hidden: widths must be >= 1");
    lik.validate();
    mixture.validate();
    meta.validate();
    controller.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  if (trial_length < 0) throw ConfigError("trial_length must be >= 0");
  if (num_seeds < 1) throw ConfigError("num_seeds must be >= 1");
  const auto e = make_environment(env);
  if (controller.action_low.size() != 0 && controller.action_low.size() != e->action_dim())
    throw ConfigError("controller action bounds do not match the environment's action dimension");
  for (const auto& a : controller.discrete_actions)
    if (a.size() != e->action_dim()) throw ConfigError("discrete action of wrong dimension");
  try {
    (void)make_schedule(schedule, *e, trial_length);
  } catch (const ParseError& pe) {
    throw ConfigError(std::string("schedule: ") + pe.what());
  } catch (const ArgumentError& ae) {
    throw ConfigError(std::string("schedule: ") + ae.what());
  }
}

std::string RunConfig::prior_file() const {
  return prior_path.empty() ? join_path(output_dir, "prior.ckpt") : prior_path;
}
std::string RunConfig::baseline_file() const {
  return baseline_path.empty() ? join_path(output_dir, "baseline.ckpt") : baseline_path;
}
std::string RunConfig::dataset_file() const {
  return dataset_path.empty() ? join_path(output_dir, "dataset.csv") : dataset_path;
}

MetaTrainSetup RunConfig::meta_setup() const { return {arch, lik, meta, controller}; }

RunConfig make_preset(const std::string& name) {
  RunConfig c;
  c.preset = name;
  // Desk scale: a smaller net and data budget. The window NLL is a sum, so
  // the table step sizes diverge here; they are rescaled together with a
  // sharper likelihood. A shorter window cuts the lag of task recognition.
  auto desk = [&c] {
    c.arch.hidden_dims = {64, 64};
    c.controller.num_candidates = 200;
    c.meta.meta_iterations = 6;
    c.meta.tasks_per_iter = 8;
    c.meta.timesteps_per_iter = 1600;
    c.meta.epochs = 50;
    c.meta.k = 8;
    c.meta.inner_lr = 0.0002;
    c.meta.outer_lr = 0.00001;
    c.lik.variance = 0.1;
    c.mixture.window = 8;
    c.mixture.spawn_window_offset = 8;
    c.mixture.online_lr = 0.00003;
    c.mixture.spawn_lr = 0.0002;
    c.mixture.alpha = 1.0;
  };
  if (name == "full") {
    // Defaults of every sub-config.
  } else if (name == "pendulum-alternating" || name == "pendulum-constant") {
    desk();
    c.env = "pendulum";
    c.schedule = name == "pendulum-constant" ? "constant(normal)" : "alternate(normal, negative, 100)";
    c.trial_length = 400;
  } else if (name == "switchlin-aba") {
    desk();
    c.env = "switchlin";
    c.schedule = "sequence(A:50, B:50, A:50)";
    c.trial_length = 150;
    // The candidate gets a stronger step than the slow M-step so that a
    // fresh model can overtake an established one after a switch.
    c.lik.variance = 1.0;
    c.meta.epochs = 20;
    c.meta.inner_lr = 0.002;
    c.meta.outer_lr = 0.0004;
    c.meta.batch_tasks = 4;
    c.mixture.online_lr = 0.0003;
    c.mixture.spawn_lr = 0.0015;
    c.mixture.alpha = 0.05;
  } else if (name == "slope-basin") {
    desk();
    c.env = "slope";
    c.schedule = "sequence(downhill:100, uphill:100)";
    c.trial_length = 200;
  } else if (name == "arm-alternating") {
    desk();
    c.env = "arm";
    c.schedule = "alternate(normal, crippled, 100)";
    c.trial_length = 400;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return c;
}

std::vector<std::string> preset_names() {
  return {"full", "pendulum-alternating", "pendulum-constant", "switchlin-aba", "slope-basin", "arm-alternating"};
}

Checkpoint load_start_checkpoint(const RunConfig& cfg) {
  const bool meta = uses_meta_prior(cfg.method);
  const std::string path = meta ? cfg.prior_file() : cfg.baseline_file();
  if (!std::filesystem::exists(path))
    throw ConfigError(std::string(meta ? "meta-trained prior" : "baseline checkpoint") + " not found: " + path +
                      (meta ? " (run meta-train first)" : " (run train-baseline first)"));
  return load_checkpoint(path);
}

TrialLog run_method(const RunConfig& cfg, const Environment& env, const Checkpoint& start, std::uint64_t seed) {
  if (start.params.arch().input_dim != env.state_dim() + env.action_dim() ||
      start.params.arch().output_dim != env.state_dim())
    throw ConfigError("checkpoint dimensions do not match environment '" + env.name() + "'");
  const TaskSchedule sched = make_schedule(cfg.schedule, env, cfg.trial_length);
  auto learner = make_learner(cfg.method, start, cfg);
  TrialLog log = run_trial(*learner, env, sched, cfg.controller, {cfg.trial_length, seed});
  log.header["method"] = to_string(cfg.method);
  log.header["env"] = env.name();
  log.header["seed"] = seed;
  nlohmann::ordered_json echo;
  for (const auto& f : config_fields()) echo[f.key] = f.get(cfg);
  echo["seed"] = std::to_string(seed);
  echo["num_seeds"] = "1";
  log.header["config"] = std::move(echo);
  return log;
}

std::vector<std::string> run(const RunConfig& cfg) {
  cfg.validate();
  const auto env = make_environment(cfg.env);
  const Checkpoint start = load_start_checkpoint(cfg);
  std::filesystem::create_directories(cfg.output_dir);
  std::vector<std::string> paths;
  for (int i = 0; i < cfg.num_seeds; ++i) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(i);
    const TrialLog log = run_method(cfg, *env, start, seed);
    const std::string base = join_path(cfg.output_dir, to_string(cfg.method) + "_seed" + std::to_string(seed));
    save_log(base + ".ndjson", log);
    std::ofstream csv(base + ".csv");
    if (!csv) throw ConfigError("cannot write " + base + ".csv");
    write_log_csv(csv, log);
    paths.push_back(base + ".ndjson");
  }
  return paths;
}

}  // namespace mole
