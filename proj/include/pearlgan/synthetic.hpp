#pragma once

#include <cstdint>
#include <filesystem>

#include <torch/torch.h>

#include "pearlgan/image.hpp"

namespace pearlgan {

// Procedural street scenes standing in for real NTIR/DC captures: sky band,
// buildings on the horizon, a road wedge, and a few vehicles and pedestrians.
// Domain A renders them as a single-channel "heat" image (objects hot, sky
// cold); domain B renders an unrelated scene in daylight colours.
struct SyntheticOptions {
  std::int64_t count = 16;  // images per domain
  std::int64_t size = 64;   // square side length
  std::uint64_t seed = 1;
};

// One scene as a CHW float tensor in [0,1] (1 channel for A, 3 for B).
torch::Tensor render_scene(Domain domain, std::int64_t size, Rng& rng);

// Writes <out>/A/*.png, <out>/B/*.png and <out>/manifest.tsv with one
// "id<TAB>domain" line per image. Returns the number of files written.
std::int64_t generate_synthetic(const std::filesystem::path& out, const SyntheticOptions& opts);

}  // namespace pearlgan
