#pragma once

// Per-timestep trial records and their newline-delimited JSON / CSV encodings.
// Layout: docs/log_format.md.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace mole {

inline constexpr int kLogSchemaVersion = 1;

struct StepRecord {
  long t = 0;
  double reward = 0.0;
  std::size_t segment = 0;
  std::string task_label;
  std::optional<double> nll_of_best;
  std::optional<std::vector<double>> posterior;  // mass assigned to each task this step
  std::optional<double> new_task_prob;
  std::optional<int> chosen_task;
  std::optional<int> num_tasks;
  bool spawn = false;
  std::uint64_t params_hash = 0;  // FNV-1a of the planning model's parameters

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct TrialLog {
  nlohmann::ordered_json header = nlohmann::ordered_json::object();
  std::vector<StepRecord> steps;

  double total_reward() const {
    double s = 0;
    for (const auto& r : steps) s += r.reward;
    return s;
  }
};

nlohmann::ordered_json to_json(const StepRecord& r);
StepRecord step_from_json(const nlohmann::json& j);

/// Header line, one line per step, then a summary line.
void write_log(std::ostream& os, const TrialLog& log);
TrialLog read_log(std::istream& is);
void write_log_csv(std::ostream& os, const TrialLog& log);

void save_log(const std::string& path, const TrialLog& log);
TrialLog load_log(const std::string& path);

}  // namespace mole
