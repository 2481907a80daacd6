#include "pearlgan/edges.hpp"

#include <cstdio>
#include <random>
#include <sstream>

#include "pearlgan/errors.hpp"

namespace fs = std::filesystem;

namespace pearlgan {

namespace F = torch::nn::functional;

EdgeMap detect_edges(const Image& img, const CannyParams& params) {
  const auto gray = to_gray(img.pixels);
  const auto mask = canny(gray, params);
  auto t = torch::empty({gray.height, gray.width}, torch::kFloat32);
  auto* p = t.data_ptr<float>();
  for (std::size_t i = 0; i < mask.size(); ++i) p[i] = mask[i] ? 1.0f : 0.0f;
  return {t};
}

EdgeCache::EdgeCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

std::string EdgeCache::key(const Image& img, const CannyParams& params) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  auto px = img.pixels.detach().to(torch::kCPU, torch::kFloat32).contiguous();
  const std::int64_t dims[3] = {px.size(0), px.size(1), px.size(2)};
  mix(dims, sizeof(dims));
  mix(px.data_ptr<float>(), static_cast<std::size_t>(px.numel()) * sizeof(float));
  const double p[3] = {params.sigma, params.high, params.low_ratio};
  mix(p, sizeof(p));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

EdgeMap EdgeCache::load_or_detect(const Image& img, const CannyParams& params) {
  const auto path = dir_ / (key(img, params) + ".png");
  if (fs::exists(path)) {
    auto cached = read_image(path, img.domain).pixels;
    return {(cached[0] > 0.5f).to(torch::kFloat32)};
  }
  auto e = detect_edges(img, params);
  write_png(path, e.mask.unsqueeze(0));
  return e;
}

torch::Tensor gradient_magnitude(const torch::Tensor& images) {
  if (images.dim() != 4) throw ShapeError("gradient_magnitude expects [N, C, H, W]");
  const auto h = images.size(2), w = images.size(3);
  auto p = F::pad(images, F::PadFuncOptions({1, 1, 1, 1}).mode(torch::kReplicate));
  // Difference first, then smooth: flat regions give exactly 0.
  auto dx = p.narrow(3, 2, w) - p.narrow(3, 0, w);
  auto dy = p.narrow(2, 2, h) - p.narrow(2, 0, h);
  auto gx = (dx.narrow(2, 0, h) + 2 * dx.narrow(2, 1, h) + dx.narrow(2, 2, h)) / 8.0;
  auto gy = (dy.narrow(3, 0, w) + 2 * dy.narrow(3, 1, w) + dy.narrow(3, 2, w)) / 8.0;
  auto sq = gx * gx + gy * gy;
  // sqrt has an infinite derivative at 0; route flat pixels through a
  // constant branch so their gradient is exactly 0.
  auto positive = sq > 0;
  auto safe = torch::where(positive, sq, torch::ones_like(sq));
  auto mag = torch::where(positive, torch::sqrt(safe), torch::zeros_like(sq));
  return std::get<0>(mag.max(1, /*keepdim=*/true));
}

torch::Tensor tile_density(const torch::Tensor& edge_mask, std::int64_t patch_size) {
  if (edge_mask.dim() != 2) throw ShapeError("edge mask must be [H, W]");
  const auto nh = edge_mask.size(0) / patch_size;
  const auto nw = edge_mask.size(1) / patch_size;
  if (nh == 0 || nw == 0) throw ShapeError("edge mask smaller than one patch");
  auto region = edge_mask.narrow(0, 0, nh * patch_size).narrow(1, 0, nw * patch_size);
  return F::adaptive_avg_pool2d(region.to(torch::kFloat64).unsqueeze(0).unsqueeze(0),
                                F::AdaptiveAvgPool2dFuncOptions({nh, nw}))
      .squeeze(0)
      .squeeze(0);
}

EdgePatch sample_edge_patch(const torch::Tensor& edge_mask, std::int64_t patch_size, Rng& rng) {
  auto density = tile_density(edge_mask, patch_size).contiguous();
  const auto nw = density.size(1);
  const auto* d = density.data_ptr<double>();
  std::vector<double> weights(d, d + density.numel());
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw NoEdgesError("edge map has no edge pixel inside the patch grid");

  const auto tile = static_cast<std::int64_t>(
      std::discrete_distribution<std::size_t>(weights.begin(), weights.end())(rng));
  EdgePatch p;
  p.row = (tile / nw) * patch_size;
  p.col = (tile % nw) * patch_size;
  auto crop = edge_mask.narrow(0, p.row, patch_size).narrow(1, p.col, patch_size);
  p.values = (crop / crop.max()).contiguous();
  return p;
}

torch::Tensor gradient_patch(const torch::Tensor& gradient_map, std::int64_t row, std::int64_t col,
                             std::int64_t patch_size) {
  if (gradient_map.dim() != 4 || gradient_map.size(1) != 1)
    throw ShapeError("gradient map must be [N, 1, H, W]");
  auto crop = gradient_map.select(0, 0).select(0, 0).narrow(0, row, patch_size).narrow(1, col, patch_size);
  return crop / crop.max().clamp_min(1e-12);
}

double eta(double i_max) {
  if (!(i_max > 0.0) || i_max > 255.0)
    throw DataError("i_max must lie in (0, 255], got " + std::to_string(i_max));
  return 0.8 * i_max / 255.0;
}

}  // namespace pearlgan
