#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <torch/torch.h>

#include "pearlgan/canny.hpp"
#include "pearlgan/image.hpp"

namespace pearlgan {

// Binary edge map of a source image: float32 [H, W] with values in {0, 1}.
struct EdgeMap {
  torch::Tensor mask;
};

// Offline edge extraction for the gradient-alignment loss (Canny on the
// channel-mean image).
EdgeMap detect_edges(const Image& img, const CannyParams& params = {});

// Disk cache of edge maps: one binary PNG per (image content, params) key.
class EdgeCache {
 public:
  explicit EdgeCache(std::filesystem::path dir);

  // Cache key: FNV-1a over image shape, float pixel bytes and params.
  static std::string key(const Image& img, const CannyParams& params);

  EdgeMap load_or_detect(const Image& img, const CannyParams& params);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

// Sobel magnitude per channel (kernel scaled by 1/8 so a ramp of slope s
// reads s), replicate-padded, reduced by channel max. [N, C, H, W] ->
// [N, 1, H, W]. Differentiable; the gradient at exactly-flat pixels is 0.
torch::Tensor gradient_magnitude(const torch::Tensor& images);

struct EdgePatch {
  torch::Tensor values;  // [l_p, l_p], divided by its own maximum
  std::int64_t row = 0;
  std::int64_t col = 0;
};

// Picks an l_p x l_p tile of the edge map (tiles on a stride-l_p grid) with
// probability proportional to its edge density. Throws NoEdgesError when no
// tile contains an edge pixel.
EdgePatch sample_edge_patch(const torch::Tensor& edge_mask, std::int64_t patch_size, Rng& rng);

// Edge density of each tile, [H / l_p, W / l_p].
torch::Tensor tile_density(const torch::Tensor& edge_mask, std::int64_t patch_size);

// Crop of a [N, 1, H, W] gradient map at the patch origin, divided by its
// own maximum (guarded against an all-zero patch). Returns [l_p, l_p].
torch::Tensor gradient_patch(const torch::Tensor& gradient_map, std::int64_t row,
                             std::int64_t col, std::int64_t patch_size);

// Edge-sharpness threshold from the dataset's raw infrared maximum.
double eta(double i_max);

}  // namespace pearlgan
