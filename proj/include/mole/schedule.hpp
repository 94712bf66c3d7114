#pragma once

// Task schedules and the schedule DSL.
//
//   constant(T)                  one task for the whole trial
//   alternate(T1, T2, ..., D)    cycle through the tasks, D steps each
//   sequence(T1:D1, T2:D2, ...)  explicit durations, repeated until the trial ends
//   random(T1, ..., Tn, D, seed=S)  segments of D steps, task drawn uniformly
//   gradual(T1, T2)              linear interpolation from T1 to T2 over the trial
//
// A task T is a preset name (`normal`), one parameter (`gain=-1`) or a
// parameter group (`{rotation=0.1, bgain=-0.5}`). Segments are cut to the
// trial length; the last one is truncated.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mole/environments.hpp"

namespace mole {

struct Segment {
  long duration;
  TaskParams task;
  std::string label;
  std::optional<TaskParams> ramp_to;  // gradual segments only
};

struct TaskSchedule {
  std::vector<Segment> segments;

  long total_duration() const;
  bool gradual() const;
  /// Index of the segment active at step t.
  std::size_t segment_at(long t) const;
  TaskParams task_at(long t, const Environment& env) const;
};

TaskSchedule make_schedule(std::string_view text, const Environment& env, long trial_length);

}  // namespace mole
