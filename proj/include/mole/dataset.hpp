#pragma once

// Append-only store of collected trajectories, persisted as one CSV row per
// transition. Column order (after a `#` header line):
//   episode, iteration, env, task, s_0..s_{ds-1}, a_0..a_{da-1}, next_0..next_{ds-1}
// Doubles are written in shortest round-trip form, so a replayed seed yields
// a byte-identical file.

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

#include "mole/dynamics.hpp"

namespace mole {

struct Trajectory {
  long episode = 0;
  int iteration = 0;
  std::string env;
  std::string task_tag;
  Eigen::MatrixXd states;       // ds x T
  Eigen::MatrixXd actions;      // da x T
  Eigen::MatrixXd next_states;  // ds x T

  long size() const { return static_cast<long>(states.cols()); }
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(int state_dim, int action_dim) : state_dim_(state_dim), action_dim_(action_dim) {}

  void append(Trajectory traj);

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  const std::vector<Trajectory>& trajectories() const { return trajs_; }
  std::size_t num_trajectories() const { return trajs_.size(); }
  long num_transitions() const;
  bool empty() const { return trajs_.empty(); }

  /// Trajectories collected in iterations <= max_iteration.
  Dataset up_to_iteration(int max_iteration) const;
  /// ceil(fraction * n) trajectories chosen at random, collection order kept.
  Dataset subset(double fraction, std::uint64_t seed) const;

  /// Normalization statistics over every transition.
  Normalizer fit_normalizer() const;

  void write(std::ostream& os) const;
  static Dataset read(std::istream& is);
  void save(const std::string& path) const;
  static Dataset load(const std::string& path);

 private:
  int state_dim_ = 0, action_dim_ = 0;
  std::vector<Trajectory> trajs_;
};

}  // namespace mole
