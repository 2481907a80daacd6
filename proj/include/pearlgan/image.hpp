#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace pearlgan {

using Rng = std::mt19937_64;

enum class Domain { A_NTIR, B_DC };

const char* domain_name(Domain d);

// A raster in unit range. `pixels` is a float32 CHW tensor, C in {1, 3}.
struct Image {
  torch::Tensor pixels;
  Domain domain = Domain::A_NTIR;
  std::string id;

  std::int64_t channels() const { return pixels.size(0); }
  std::int64_t height() const { return pixels.size(1); }
  std::int64_t width() const { return pixels.size(2); }
};

struct UnpairedDataset {
  std::vector<Image> domain_a;
  std::vector<Image> domain_b;
  // Largest raw 8-bit value over every domain-A source image.
  double i_max = 0.0;
};

struct PreprocessConfig {
  std::int64_t resize_width = 500;
  std::int64_t resize_height = 400;
  std::int64_t crop_width = 360;
  std::int64_t crop_height = 288;
  std::int64_t train_crop = 256;
  double hflip_prob = 0.5;

  void validate() const;
};

struct LoadOptions {
  // When false an undecodable file aborts loading; when true it is reported
  // on stderr and skipped.
  bool skip_undecodable = false;
};

// Reads one 8-bit PNG/JPEG. Grayscale files keep one channel; colour files
// come back as RGB. Throws DataError on decode failure.
Image read_image(const std::filesystem::path& path, Domain domain);

// Writes an image (values clamped to [0,1]) as 8-bit PNG.
void write_png(const std::filesystem::path& path, const torch::Tensor& chw);

// Lexicographically sorted image files (.png/.jpg/.jpeg) in `dir`.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

// Single-channel images are replicated to three channels.
Image to_three_channels(Image img);

UnpairedDataset load_dataset(const std::filesystem::path& dir_a,
                             const std::filesystem::path& dir_b,
                             const LoadOptions& opts = {});

// Bilinear resize to the configured size, then centre crop. An image that
// already has the crop size is passed through, so preprocess is idempotent.
Image preprocess(const Image& img, const PreprocessConfig& cfg);

struct AugmentParams {
  std::int64_t top = 0;
  std::int64_t left = 0;
  bool flip = false;
};

AugmentParams draw_augment(std::int64_t height, std::int64_t width,
                           std::int64_t crop, double hflip_prob, Rng& rng);

// Applies a crop/flip to any [..., H, W] tensor (images and edge maps alike).
torch::Tensor apply_augment(const torch::Tensor& t, const AugmentParams& p,
                            std::int64_t crop);

Image augment(const Image& img, std::int64_t crop, double hflip_prob, Rng& rng);

// Indices of one domain-A and one domain-B image, drawn independently and
// uniformly.
std::pair<std::size_t, std::size_t> sample_unpaired_indices(std::size_t n_a,
                                                            std::size_t n_b,
                                                            Rng& rng);

std::pair<Image, Image> sample_unpaired_batch(const UnpairedDataset& ds, Rng& rng);

}  // namespace pearlgan
