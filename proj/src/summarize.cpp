#include "mole/summarize.hpp"

#include <cstdio>
#include <map>
#include <ostream>

namespace mole {

Summary summarize(const TrialLog& log) {
  Summary s;
  s.method = log.header.contains("method") ? log.header["method"].get<std::string>() : "";
  s.steps = static_cast<long>(log.steps.size());
  double cum = 0.0;
  for (const auto& r : log.steps) {
    cum += r.reward;
    s.cumulative_reward.push_back(cum);
    if (r.spawn) ++s.spawn_count;
    if (r.num_tasks) s.num_tasks = *r.num_tasks;
  }
  s.total_reward = cum;

  // Segment boundaries are where the segment index changes.
  std::map<std::string, std::size_t> first_seen;
  long revisit_steps = 0, revisit_hits = 0;
  for (std::size_t i = 0; i < log.steps.size();) {
    std::size_t j = i;
    while (j < log.steps.size() && log.steps[j].segment == log.steps[i].segment) ++j;
    SegmentStats seg;
    seg.index = s.segments.size();
    seg.label = log.steps[i].task_label;
    seg.start = log.steps[i].t;
    seg.length = static_cast<long>(j - i);
    std::map<int, long> votes;
    for (std::size_t k = i; k < j; ++k) {
      seg.total_reward += log.steps[k].reward;
      if (log.steps[k].chosen_task) ++votes[*log.steps[k].chosen_task];
      if (log.steps[k].spawn) ++seg.spawns;
    }
    seg.mean_reward = seg.total_reward / double(seg.length);
    long best_votes = -1;
    for (const auto& [task, n] : votes)
      if (n > best_votes) {
        best_votes = n;
        seg.modal_task = task;
      }

    auto it = first_seen.find(seg.label);
    if (it == first_seen.end()) {
      first_seen.emplace(seg.label, seg.index);
    } else {
      seg.first_occurrence = it->second;
      const auto& original = s.segments[it->second].modal_task;
      if (original && !votes.empty()) {
        long hits = 0;
        for (std::size_t k = i; k < j; ++k)
          if (log.steps[k].chosen_task == original) ++hits;
        seg.recall_fraction = double(hits) / double(seg.length);
        revisit_steps += seg.length;
        revisit_hits += hits;
      }
    }
    s.segments.push_back(std::move(seg));
    i = j;
  }
  if (revisit_steps > 0) s.recall_fraction = double(revisit_hits) / double(revisit_steps);
  return s;
}

nlohmann::ordered_json summary_to_json(const Summary& s) {
  nlohmann::ordered_json j;
  j["record"] = "summary";
  j["method"] = s.method;
  j["steps"] = s.steps;
  j["total_reward"] = s.total_reward;
  if (s.num_tasks) j["num_tasks"] = *s.num_tasks;
  j["spawn_count"] = s.spawn_count;
  if (s.recall_fraction) j["recall_fraction"] = *s.recall_fraction;
  auto segs = nlohmann::ordered_json::array();
  for (const auto& g : s.segments) {
    nlohmann::ordered_json e;
    e["index"] = g.index;
    e["task"] = g.label;
    e["start"] = g.start;
    e["length"] = g.length;
    e["total_reward"] = g.total_reward;
    e["mean_reward"] = g.mean_reward;
    if (g.modal_task) e["modal_task"] = *g.modal_task;
    if (g.first_occurrence) e["first_occurrence"] = *g.first_occurrence;
    if (g.recall_fraction) e["recall_fraction"] = *g.recall_fraction;
    e["spawns"] = g.spawns;
    segs.push_back(std::move(e));
  }
  j["segments"] = std::move(segs);
  return j;
}

void print_summary_table(std::ostream& os, const std::vector<std::pair<std::string, Summary>>& runs) {
  char buf[256];
  for (const auto& [name, s] : runs) {
    std::snprintf(buf, sizeof buf, "%s  method=%s steps=%ld total_reward=%.4f tasks=%s spawns=%d recall=%s\n",
                  name.c_str(), s.method.c_str(), s.steps, s.total_reward,
                  s.num_tasks ? std::to_string(*s.num_tasks).c_str() : "-", s.spawn_count,
                  s.recall_fraction ? std::to_string(*s.recall_fraction).c_str() : "-");
    os << buf;
    std::snprintf(buf, sizeof buf, "  %4s %-24s %7s %7s %12s %10s %6s %7s\n", "seg", "task", "start", "length",
                  "total", "mean", "modal", "recall");
    os << buf;
    for (const auto& g : s.segments) {
      std::snprintf(buf, sizeof buf, "  %4zu %-24s %7ld %7ld %12.4f %10.4f %6s %7s\n", g.index, g.label.c_str(),
                    g.start, g.length, g.total_reward, g.mean_reward,
                    g.modal_task ? std::to_string(*g.modal_task).c_str() : "-",
                    g.recall_fraction ? std::to_string(*g.recall_fraction).substr(0, 5).c_str() : "-");
      os << buf;
    }
  }
}

}  // namespace mole
