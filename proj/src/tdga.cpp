#include "pearlgan/tdga.hpp"

#include <string>

#include "pearlgan/errors.hpp"

namespace pearlgan {

namespace F = torch::nn::functional;

AttentionHeadImpl::AttentionHeadImpl(std::int64_t in_channels) {
  conv = register_module("conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(in_channels, 1, 3).padding(1)));
}

torch::Tensor AttentionHeadImpl::forward(const torch::Tensor& x) {
  return torch::sigmoid(conv->forward(x));
}

torch::Tensor upsample_nearest(const torch::Tensor& x, std::int64_t factor) {
  if (factor == 1) return x;
  return x.repeat_interleave(factor, 2).repeat_interleave(factor, 3);
}

void check_tdga_input(const torch::Tensor& f) {
  if (f.dim() != 4) throw ShapeError("TDGA expects an [N, c, h, w] tensor");
  const auto c = f.size(1), h = f.size(2), w = f.size(3);
  if (c % kPyramidScales != 0)
    throw ShapeError("TDGA channel count " + std::to_string(c) + " is not divisible by 4");
  if (h % 16 != 0 || w % 16 != 0)
    throw ShapeError("TDGA spatial size " + std::to_string(h) + "x" + std::to_string(w) +
                     " is not divisible by 16");
}

TdgaImpl::TdgaImpl(std::int64_t channels) : channels_(channels) {
  if (channels % kPyramidScales != 0)
    throw ShapeError("TDGA channel count " + std::to_string(channels) + " is not divisible by 4");
  split_conv = register_module(
      "split_conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, channels, 3).padding(1)));
  for (int s = 1; s <= kPyramidScales; ++s)
    heads[s - 1] = register_module("head" + std::to_string(s), AttentionHead(channels / kPyramidScales));
  full_head = register_module("full_head", AttentionHead(channels));
}

std::array<torch::Tensor, kPyramidScales> TdgaImpl::split_features(const torch::Tensor& f) {
  if (f.dim() != 4 || f.size(1) != channels_)
    throw ShapeError("split_features: expected [N, " + std::to_string(channels_) + ", h, w]");
  auto chunks = split_conv->forward(f).chunk(kPyramidScales, 1);
  return {chunks[0], chunks[1], chunks[2], chunks[3]};
}

std::array<torch::Tensor, kPyramidScales> TdgaImpl::stat_pyramid(
    const std::array<torch::Tensor, kPyramidScales>& groups) {
  std::array<torch::Tensor, kPyramidScales> levels;
  for (int s = 1; s <= kPyramidScales; ++s) {
    const auto& g = groups[s - 1];
    if (g.size(2) % (1 << s) != 0 || g.size(3) % (1 << s) != 0)
      throw ShapeError("stat_pyramid: group spatial size not divisible by " + std::to_string(1 << s));
    auto x = g;
    for (int k = 0; k < s; ++k) x = F::avg_pool2d(x, F::AvgPool2dFuncOptions(2).stride(2));
    levels[s - 1] = x;
  }
  return levels;
}

torch::Tensor TdgaImpl::guided_attention(int scale, const torch::Tensor& level,
                                         const torch::Tensor& prior) {
  auto& head = heads.at(static_cast<std::size_t>(scale - 1));
  if (!prior.defined()) return head->forward(level);
  return head->forward(level + level * upsample_nearest(prior, 2));
}

std::array<torch::Tensor, kPyramidScales> TdgaImpl::cascade_attention(
    const std::array<torch::Tensor, kPyramidScales>& pyramid) {
  std::array<torch::Tensor, kPyramidScales> maps;
  torch::Tensor prior;
  for (int s = kPyramidScales; s >= 1; --s) {
    prior = guided_attention(s, pyramid[s - 1], prior);
    maps[kPyramidScales - s] = prior;
  }
  return maps;
}

torch::Tensor TdgaImpl::merge_groups(const std::array<torch::Tensor, kPyramidScales>& groups,
                                     const std::array<torch::Tensor, kPyramidScales>& maps) {
  std::vector<torch::Tensor> parts;
  parts.reserve(kPyramidScales);
  for (int s = kPyramidScales; s >= 1; --s) {
    const auto& g = groups[s - 1];
    const auto a = upsample_nearest(maps[kPyramidScales - s], std::int64_t{1} << s);
    parts.push_back(g + g * a);
  }
  return torch::cat(parts, 1);
}

torch::Tensor TdgaImpl::attention_tensor(const std::array<torch::Tensor, kPyramidScales>& maps) {
  // maps[1..3] are scales 3, 2, 1.
  return torch::cat({upsample_nearest(maps[1], 8), upsample_nearest(maps[2], 4),
                     upsample_nearest(maps[3], 2)},
                    1);
}

TdgaOutput TdgaImpl::forward(const torch::Tensor& f) {
  check_tdga_input(f);
  auto groups = split_features(f);
  auto maps = cascade_attention(stat_pyramid(groups));
  TdgaOutput out;
  out.features = merge_groups(groups, maps);
  out.attention = attention_tensor(maps);
  out.maps = maps;
  return out;
}

torch::Tensor TdgaImpl::full_resolution_attention(const torch::Tensor& f) {
  return full_head->forward(f);
}

}  // namespace pearlgan
