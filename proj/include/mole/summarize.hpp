#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mole/trial_log.hpp"

namespace mole {

struct SegmentStats {
  std::size_t index = 0;
  std::string label;
  long start = 0;
  long length = 0;
  double total_reward = 0.0;
  double mean_reward = 0.0;
  /// Set when the same task label appeared in an earlier segment.
  std::optional<std::size_t> first_occurrence;
  std::optional<int> modal_task;       // most frequent chosen task in this segment
  std::optional<double> recall_fraction;  // revisits: share of steps choosing the first occurrence's modal task
  int spawns = 0;
};

struct Summary {
  std::string method;
  long steps = 0;
  double total_reward = 0.0;
  std::optional<int> num_tasks;
  int spawn_count = 0;
  std::optional<double> recall_fraction;  // over all revisit steps
  std::vector<SegmentStats> segments;
  std::vector<double> cumulative_reward;
};

Summary summarize(const TrialLog& log);

nlohmann::ordered_json summary_to_json(const Summary& s);

/// Human-readable table: one block per log plus per-segment rows.
void print_summary_table(std::ostream& os, const std::vector<std::pair<std::string, Summary>>& runs);

}  // namespace mole
