#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "pearlgan/networks.hpp"
#include "pearlgan/training.hpp"

namespace pearlgan {

// On-disk layout (all integers little-endian):
//
//   char[8]  magic "PGANCKPT"
//   u32      format version (kCheckpointVersion)
//   i64      iteration
//   u32 len, bytes   training config as key=value lines
//   u32 len, bytes   sampling RNG state (std::mt19937_64 text form)
//   u32      tensor count
//   per tensor:
//     u32 len, bytes  key (module path, e.g. "g_ab.encoder.stem.1.weight")
//     u32             rank
//     i64[rank]       shape
//     f32[numel]      payload, row-major
//   char[8]  end marker "PGANEND."
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::int64_t iteration = 0;
  std::string config_text;
  std::string rng_state;
  std::vector<std::pair<std::string, torch::Tensor>> tensors;

  // Throws CheckpointError when the key is absent.
  const torch::Tensor& at(const std::string& key) const;
  bool contains(const std::string& key) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

// Throws CheckpointError on a bad magic, a version mismatch or truncation.
Checkpoint read_checkpoint(const std::filesystem::path& path);

void save_checkpoint(const Trainer& trainer, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Appends a module's parameters and buffers under `prefix`.
void collect_module(const torch::nn::Module& m, const std::string& prefix,
                    std::vector<std::pair<std::string, torch::Tensor>>& out);
// Copies tensors saved under `prefix` back into the module (all must exist).
void restore_module(torch::nn::Module& m, const std::string& prefix, const Checkpoint& ckpt);

// Rebuilds both generators from a checkpoint for inference.
struct GeneratorPair {
  Generator g_ab{nullptr};
  Generator g_ba{nullptr};
  TrainConfig config;
};
GeneratorPair load_generators(const std::filesystem::path& path);

}  // namespace pearlgan
