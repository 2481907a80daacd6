#pragma once

#include <array>
#include <cstdint>

#include <torch/torch.h>

namespace pearlgan {

// Number of pyramid scales and of scales constrained by the attentional losses.
inline constexpr int kPyramidScales = 4;
inline constexpr int kAttentionScales = 3;

// 3x3 convolution to a single channel followed by a sigmoid. Every output
// lies strictly inside (0, 1) for finite input.
class AttentionHeadImpl : public torch::nn::Module {
 public:
  explicit AttentionHeadImpl(std::int64_t in_channels);

  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d conv{nullptr};
};
TORCH_MODULE(AttentionHead);

// Outputs of one TDGA pass. All tensors carry a leading batch dimension.
struct TdgaOutput {
  torch::Tensor features;  // [N, c, h, w], groups merged in order 4,3,2,1
  torch::Tensor attention;  // [N, 3, h, w], (A_d3 up8, A_d2 up4, A_d1 up2)
  // Per-scale maps, coarsest first: index 0 is scale 4 (h/16), index 3 is scale 1 (h/2).
  std::array<torch::Tensor, kPyramidScales> maps;
};

// Top-down guided attention. The input features are mixed by a
// channel-preserving 3x3 convolution and split into four groups; group s is
// average-pooled s times, and attention is estimated coarse-to-fine with each
// coarser map gating the next finer level before its head runs. Every group
// is finally re-weighted by its upsampled map, F + F * A, and the groups are
// concatenated coarsest first.
class TdgaImpl : public torch::nn::Module {
 public:
  explicit TdgaImpl(std::int64_t channels);

  TdgaOutput forward(const torch::Tensor& f);

  // Split-conv then partition into [F_1, F_2, F_3, F_4].
  std::array<torch::Tensor, kPyramidScales> split_features(const torch::Tensor& f);

  // Level s (1-based) is group s pooled s times with 2x2/stride-2 windows.
  static std::array<torch::Tensor, kPyramidScales> stat_pyramid(
      const std::array<torch::Tensor, kPyramidScales>& groups);

  // Att_s(level + level * up2(prior)); an undefined prior means none (scale 4).
  torch::Tensor guided_attention(int scale, const torch::Tensor& level,
                                 const torch::Tensor& prior);

  // [A_d4, A_d3, A_d2, A_d1].
  std::array<torch::Tensor, kPyramidScales> cascade_attention(
      const std::array<torch::Tensor, kPyramidScales>& pyramid);

  // Feature enhancement and reversed-order concatenation from given maps
  // (same indexing as TdgaOutput::maps).
  static torch::Tensor merge_groups(const std::array<torch::Tensor, kPyramidScales>& groups,
                                    const std::array<torch::Tensor, kPyramidScales>& maps);

  // T from the three finer maps, upsampled to the group resolution.
  static torch::Tensor attention_tensor(const std::array<torch::Tensor, kPyramidScales>& maps);

  // The standalone full-resolution head on F (unused by the cascade).
  torch::Tensor full_resolution_attention(const torch::Tensor& f);

  std::int64_t channels() const { return channels_; }

  torch::nn::Conv2d split_conv{nullptr};
  // heads[s - 1] serves scale s.
  std::array<AttentionHead, kPyramidScales> heads{nullptr, nullptr, nullptr, nullptr};
  AttentionHead full_head{nullptr};

 private:
  std::int64_t channels_;
};
TORCH_MODULE(Tdga);

// Nearest-neighbour integer upsampling of an [N, C, h, w] tensor.
torch::Tensor upsample_nearest(const torch::Tensor& x, std::int64_t factor);

// Validates TDGA preconditions on an [N, c, h, w] tensor; throws ShapeError.
void check_tdga_input(const torch::Tensor& f);

}  // namespace pearlgan
