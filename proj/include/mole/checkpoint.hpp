#pragma once

// Binary checkpoint for a network, its likelihood variance and normalization,
// optionally followed by a mixture task table. Byte layout: docs/checkpoint_format.md.

#include <iosfwd>
#include <optional>
#include <string>

#include "mole/dynamics.hpp"
#include "mole/mixture.hpp"

namespace mole {

inline constexpr char kCheckpointMagic[8] = {'M', 'O', 'L', 'E', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ParamVector params;
  LikelihoodConfig lik;
  Normalizer norm;
  std::optional<MixtureState<double>> mixture;  // task table, when present

  DynamicsModel model() const { return {&params, &norm}; }
};

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mole
