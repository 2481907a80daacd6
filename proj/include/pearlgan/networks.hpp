#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "pearlgan/tdga.hpp"

namespace pearlgan {

struct GeneratorOptions {
  std::int64_t ngf = 64;              // stem width; bottleneck width is 4 * ngf
  std::int64_t encoder_blocks = 4;    // residual blocks after the encoder TDGA
  std::int64_t decoder_blocks = 5;    // residual blocks after the decoder TDGA
  std::int64_t norm_groups = 8;       // group-norm groups in the decoder tail
};

struct DiscriminatorOptions {
  std::int64_t ndf = 64;
  std::int64_t power_iterations = 1;
};

// Reflection-padded 3x3 conv / instance-norm / ReLU twice, plus identity.
class ResidualBlockImpl : public torch::nn::Module {
 public:
  explicit ResidualBlockImpl(std::int64_t channels);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Sequential body{nullptr};
};
TORCH_MODULE(ResidualBlock);

struct Encoding {
  torch::Tensor features;   // post-residual encoder output [N, 4ngf, H/4, W/4]
  torch::Tensor attention;  // encoder TDGA tensor T [N, 3, H/4, W/4]
  std::array<torch::Tensor, kPyramidScales> maps;
};

class EncoderImpl : public torch::nn::Module {
 public:
  explicit EncoderImpl(const GeneratorOptions& opts);
  Encoding forward(const torch::Tensor& x);

  torch::nn::Sequential stem{nullptr};
  Tdga tdga{nullptr};
  torch::nn::Sequential blocks{nullptr};
};
TORCH_MODULE(Encoder);

// TDGA, residual stack, two transposed-conv upsamplings whose norms are
// group norms, then a 7x7 head and tanh.
class DecoderImpl : public torch::nn::Module {
 public:
  explicit DecoderImpl(const GeneratorOptions& opts);
  torch::Tensor forward(const torch::Tensor& features);

  Tdga tdga{nullptr};
  torch::nn::Sequential blocks{nullptr};
  torch::nn::Sequential up{nullptr};
  torch::nn::Sequential head{nullptr};
};
TORCH_MODULE(Decoder);

// Encoder of the source domain plus decoder of the target domain. Images
// enter and leave in [-1, 1]; see to_unit/from_unit for the [0, 1] boundary.
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(const GeneratorOptions& opts = {});

  Encoding encode(const torch::Tensor& x);
  torch::Tensor decode(const torch::Tensor& features);
  torch::Tensor forward(const torch::Tensor& x) { return decode(encode(x).features); }

  const GeneratorOptions& options() const { return opts_; }

  Encoder encoder{nullptr};
  Decoder decoder{nullptr};

 private:
  GeneratorOptions opts_;
};
TORCH_MODULE(Generator);

// Input side length must be a multiple of this for the encoder TDGA.
inline constexpr std::int64_t kGeneratorSizeMultiple = 64;

// Convolution whose weight is divided by its spectral norm, estimated by
// power iteration. `u`/`v` are persistent buffers; one iteration runs per
// forward while training.
class SNConv2dImpl : public torch::nn::Module {
 public:
  SNConv2dImpl(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t stride,
               std::int64_t padding, std::int64_t power_iterations = 1);

  torch::Tensor forward(const torch::Tensor& x);

  // Runs n power iterations without touching autograd.
  void power_iterate(std::int64_t n);
  // Current sigma estimate u^T W v.
  torch::Tensor sigma() const;
  // Weight divided by the current sigma estimate.
  torch::Tensor normalized_weight() const;

  torch::Tensor weight, bias, u, v;
  std::int64_t stride, padding, power_iterations;
};
TORCH_MODULE(SNConv2d);

// 70x70 PatchGAN stack: 4x4 convs with strides 2,2,2,1,1, leaky ReLU.
class PatchDiscriminatorImpl : public torch::nn::Module {
 public:
  PatchDiscriminatorImpl(std::int64_t in_channels, const DiscriminatorOptions& opts);
  torch::Tensor forward(const torch::Tensor& x);

  std::vector<SNConv2d> convs;
};
TORCH_MODULE(PatchDiscriminator);

// The three views a discriminator inspects.
struct DiscriminatorViews {
  torch::Tensor rgb, luminance, gradient;
};
DiscriminatorViews discriminator_views(const torch::Tensor& images);

using ScoreGrids = std::array<torch::Tensor, 3>;

// Three independent patch discriminators over colour, luminance and
// gradient-magnitude views.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(const DiscriminatorOptions& opts = {});
  ScoreGrids forward(const torch::Tensor& images);

  PatchDiscriminator color{nullptr}, luminance{nullptr}, gradient{nullptr};
};
TORCH_MODULE(Discriminator);

// [-1, 1] <-> [0, 1].
inline torch::Tensor to_unit(const torch::Tensor& x) { return (x + 1.0) * 0.5; }
inline torch::Tensor from_unit(const torch::Tensor& x) { return x * 2.0 - 1.0; }

// Names of normalisation layers in forward order ("instance" / "group").
std::vector<std::string> norm_layer_sequence(const torch::nn::Module& m);

// Normal(0, 0.02) conv weights and zero biases, the usual GAN init.
void init_weights(torch::nn::Module& m);

}  // namespace pearlgan
