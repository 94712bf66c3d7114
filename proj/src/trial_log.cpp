#include "mole/trial_log.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "mole/common.hpp"
#include "mole/summarize.hpp"

namespace mole {

nlohmann::ordered_json to_json(const StepRecord& r) {
  nlohmann::ordered_json j;
  j["record"] = "step";
  j["t"] = r.t;
  j["reward"] = r.reward;
  j["segment"] = r.segment;
  j["task"] = r.task_label;
  if (r.nll_of_best) j["nll_of_best"] = *r.nll_of_best;
  if (r.posterior) j["posterior"] = *r.posterior;
  if (r.new_task_prob) j["new_task_prob"] = *r.new_task_prob;
  if (r.chosen_task) j["chosen_task"] = *r.chosen_task;
  if (r.num_tasks) j["num_tasks"] = *r.num_tasks;
  j["spawn"] = r.spawn;
  j["params_hash"] = r.params_hash;
  return j;
}

StepRecord step_from_json(const nlohmann::json& j) {
  StepRecord r;
  r.t = j.at("t").get<long>();
  r.reward = j.at("reward").get<double>();
  r.segment = j.at("segment").get<std::size_t>();
  r.task_label = j.at("task").get<std::string>();
  if (j.contains("nll_of_best")) r.nll_of_best = j["nll_of_best"].get<double>();
  if (j.contains("posterior")) r.posterior = j["posterior"].get<std::vector<double>>();
  if (j.contains("new_task_prob")) r.new_task_prob = j["new_task_prob"].get<double>();
  if (j.contains("chosen_task")) r.chosen_task = j["chosen_task"].get<int>();
  if (j.contains("num_tasks")) r.num_tasks = j["num_tasks"].get<int>();
  r.spawn = j.at("spawn").get<bool>();
  r.params_hash = j.at("params_hash").get<std::uint64_t>();
  return r;
}

void write_log(std::ostream& os, const TrialLog& log) {
  nlohmann::ordered_json h;
  h["record"] = "header";
  h["schema"] = kLogSchemaVersion;
  for (const auto& [k, v] : log.header.items()) h[k] = v;
  os << h.dump() << '\n';
  for (const auto& r : log.steps) os << to_json(r).dump() << '\n';
  os << summary_to_json(summarize(log)).dump() << '\n';
}

TrialLog read_log(std::istream& is) {
  TrialLog log;
  std::string line;
  bool have_header = false;
  long lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError("log line " + std::to_string(lineno) + ": " + e.what());
    }
    const std::string kind = j.value("record", "");
    if (kind == "header") {
      const int schema = j.value("schema", -1);
      if (schema != kLogSchemaVersion)
        throw SchemaError("log schema version " + std::to_string(schema) + " != supported " +
                          std::to_string(kLogSchemaVersion));
      for (const auto& [k, v] : j.items())
        if (k != "record" && k != "schema") log.header[k] = v;
      have_header = true;
    } else if (kind == "step") {
      if (!have_header) throw SchemaError("log: step record before header");
      try {
        log.steps.push_back(step_from_json(j));
      } catch (const nlohmann::json::exception& e) {
        throw SchemaError("log line " + std::to_string(lineno) + ": " + e.what());
      }
    } else if (kind != "summary") {
      throw SchemaError("log line " + std::to_string(lineno) + ": unknown record kind '" + kind + "'");
    }
  }
  if (!have_header) throw SchemaError("log: missing header");
  return log;
}

void write_log_csv(std::ostream& os, const TrialLog& log) {
  os << "t,reward,segment,task,nll_of_best,chosen_task,num_tasks,spawn,new_task_prob,posterior\n";
  auto opt = [&](const auto& v) {
    if (v) os << *v;
  };
  for (const auto& r : log.steps) {
    os << r.t << ',' << r.reward << ',' << r.segment << ",\"" << r.task_label << "\",";
    opt(r.nll_of_best);
    os << ',';
    opt(r.chosen_task);
    os << ',';
    opt(r.num_tasks);
    os << ',' << (r.spawn ? 1 : 0) << ',';
    opt(r.new_task_prob);
    os << ',';
    if (r.posterior)
      for (std::size_t i = 0; i < r.posterior->size(); ++i) os << (i ? ";" : "") << (*r.posterior)[i];
    os << '\n';
  }
}

void save_log(const std::string& path, const TrialLog& log) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open log for writing: " + path);
  write_log(os, log);
}

TrialLog load_log(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open log: " + path);
  return read_log(is);
}

}  // namespace mole
