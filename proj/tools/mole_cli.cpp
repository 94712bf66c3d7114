// mole: meta-train a prior, train the plain baseline, run trials, summarize logs.
//
// Exit codes: 0 ok, 2 configuration error, 3 numerical error, 1 anything else.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "mole/harness.hpp"
#include "mole/summarize.hpp"

namespace {

struct ConfigOptions {
  std::string config_file;
  std::map<std::string, std::string> values;
};

void add_config_options(CLI::App* cmd, ConfigOptions& opts) {
  cmd->add_option("-c,--config", opts.config_file, "key = value config file");
  for (const auto& f : mole::config_fields()) {
    auto* o = cmd->add_option("--" + f.key, opts.values[f.key], f.help);
    o->type_name("VALUE");
  }
}

mole::RunConfig resolve(CLI::App* cmd, const ConfigOptions& opts) {
  mole::RunConfig cfg;
  if (cmd->count("--preset")) mole::set_field(cfg, "preset", opts.values.at("preset"));
  if (!opts.config_file.empty()) mole::apply_config_file(cfg, opts.config_file);
  for (const auto& f : mole::config_fields())
    if (f.key != "preset" && cmd->count("--" + f.key)) mole::set_field(cfg, f.key, opts.values.at(f.key));
  mole::apply_env_overrides(cfg);
  cfg.validate();
  return cfg;
}

int meta_train_cmd(const mole::RunConfig& cfg) {
  const auto env = mole::make_environment(cfg.env);
  std::filesystem::create_directories(cfg.output_dir);
  const auto result = mole::meta_train(*env, cfg.meta_setup(), cfg.seed);
  mole::save_checkpoint(cfg.prior_file(), result.prior);
  result.dataset.save(cfg.dataset_file());
  std::cout << "prior: " << cfg.prior_file() << "\ndataset: " << cfg.dataset_file() << " ("
            << result.dataset.num_transitions() << " transitions)\n";
  return 0;
}

int train_baseline_cmd(const mole::RunConfig& cfg) {
  const mole::Dataset data = mole::Dataset::load(cfg.dataset_file());
  const auto ckpt = mole::train_baseline(data, cfg.meta_setup(), cfg.seed);
  std::filesystem::create_directories(std::filesystem::path(cfg.baseline_file()).parent_path().empty()
                                          ? std::filesystem::path(".")
                                          : std::filesystem::path(cfg.baseline_file()).parent_path());
  mole::save_checkpoint(cfg.baseline_file(), ckpt);
  std::cout << "baseline: " << cfg.baseline_file() << '\n';
  return 0;
}

int run_cmd(const mole::RunConfig& cfg) {
  std::vector<std::pair<std::string, mole::Summary>> rows;
  for (const auto& path : mole::run(cfg)) rows.emplace_back(path, mole::summarize(mole::load_log(path)));
  mole::print_summary_table(std::cout, rows);
  return 0;
}

int summarize_cmd(const std::vector<std::string>& logs, bool json) {
  std::vector<std::pair<std::string, mole::Summary>> rows;
  for (const auto& path : logs) rows.emplace_back(path, mole::summarize(mole::load_log(path)));
  if (json)
    for (const auto& [path, s] : rows) {
      auto j = mole::summary_to_json(s);
      j["file"] = path;
      std::cout << j.dump() << '\n';
    }
  else
    mole::print_summary_table(std::cout, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online mixture of meta-learned dynamics models for model-based control"};
  app.require_subcommand(1);

  ConfigOptions meta_opts, base_opts, run_opts;
  auto* meta_cmd = app.add_subcommand("meta-train", "collect data and meta-train the prior");
  add_config_options(meta_cmd, meta_opts);
  auto* base_cmd = app.add_subcommand("train-baseline", "train the plain model on the meta-training dataset");
  add_config_options(base_cmd, base_opts);
  auto* run_cmd_app = app.add_subcommand("run", "run trials of one method");
  add_config_options(run_cmd_app, run_opts);

  std::vector<std::string> logs;
  bool json = false;
  auto* sum_cmd = app.add_subcommand("summarize", "per-segment statistics of trial logs");
  sum_cmd->add_option("logs", logs, "log files")->required();
  sum_cmd->add_flag("--json", json, "one JSON summary per line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*meta_cmd) return meta_train_cmd(resolve(meta_cmd, meta_opts));
    if (*base_cmd) return train_baseline_cmd(resolve(base_cmd, base_opts));
    if (*run_cmd_app) return run_cmd(resolve(run_cmd_app, run_opts));
    if (*sum_cmd) return summarize_cmd(logs, json);
  } catch (const mole::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const mole::ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const mole::SchemaError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const mole::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
