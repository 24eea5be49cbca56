#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ctsynth/gan_config.hpp"
#include "ctsynth/tensor.hpp"
#include "ctsynth/trainer.hpp"

namespace ctsynth {

// A checkpoint is a directory holding
//   manifest.json  config echo, step, PRNG state, ADAM step counters and one entry per tensor
//                  {name, kind, shape, offset, length} with offsets/lengths in bytes;
//   tensors.bin    every tensor as binary64 little-endian, concatenated in manifest order.

struct Checkpoint {
  GanConfig config;
  std::int64_t step = 0;
  std::string rng_state;
  std::vector<std::uint64_t> d_adam_steps;
  std::vector<std::uint64_t> g_adam_steps;
  std::map<std::string, Tensor> tensors;
};

Checkpoint capture_checkpoint(Trainer& trainer);
void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
Checkpoint read_checkpoint(const std::filesystem::path& dir);

/// Copies tensors and counters into a trainer whose architecture matches. Throws
/// DimensionError on any missing tensor or shape mismatch.
void restore_checkpoint(Trainer& trainer, const Checkpoint& ckpt);

inline void save_checkpoint(Trainer& trainer, const std::filesystem::path& dir) {
  write_checkpoint(capture_checkpoint(trainer), dir);
}

/// Builds a trainer from the embedded config and restores all state.
Trainer load_trainer(const std::filesystem::path& dir);

/// True when two configs describe the same architecture (everything a tensor shape depends on).
bool same_architecture(const GanConfig& a, const GanConfig& b);

std::string config_to_json(const GanConfig& cfg);
GanConfig config_from_json(const std::string& text);

}  // namespace ctsynth
