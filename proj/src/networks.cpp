#include "pearlgan/networks.hpp"

#include "pearlgan/edges.hpp"
#include "pearlgan/errors.hpp"

namespace pearlgan {

namespace nn = torch::nn;

namespace {

nn::InstanceNorm2d instance_norm(std::int64_t c) {
  return nn::InstanceNorm2d(nn::InstanceNorm2dOptions(c).affine(false).track_running_stats(false));
}

nn::Conv2d conv(std::int64_t in, std::int64_t out, std::int64_t k, std::int64_t stride = 1,
                std::int64_t padding = 0) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, k).stride(stride).padding(padding));
}

}  // namespace

ResidualBlockImpl::ResidualBlockImpl(std::int64_t channels) {
  body = register_module("body", nn::Sequential(nn::ReflectionPad2d(1), conv(channels, channels, 3),
                                                instance_norm(channels), nn::ReLU(),
                                                nn::ReflectionPad2d(1), conv(channels, channels, 3),
                                                instance_norm(channels)));
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) { return x + body->forward(x); }

EncoderImpl::EncoderImpl(const GeneratorOptions& opts) {
  const auto ngf = opts.ngf;
  stem = register_module(
      "stem", nn::Sequential(nn::ReflectionPad2d(3), conv(3, ngf, 7), instance_norm(ngf), nn::ReLU(),
                             conv(ngf, 2 * ngf, 3, 2, 1), instance_norm(2 * ngf), nn::ReLU(),
                             conv(2 * ngf, 4 * ngf, 3, 2, 1), instance_norm(4 * ngf), nn::ReLU()));
  tdga = register_module("tdga", Tdga(4 * ngf));
  blocks = register_module("blocks", nn::Sequential());
  for (std::int64_t i = 0; i < opts.encoder_blocks; ++i) blocks->push_back(ResidualBlock(4 * ngf));
}

Encoding EncoderImpl::forward(const torch::Tensor& x) {
  auto t = tdga->forward(stem->forward(x));
  Encoding e;
  e.features = blocks->is_empty() ? t.features : blocks->forward(t.features);
  e.attention = t.attention;
  e.maps = t.maps;
  return e;
}

DecoderImpl::DecoderImpl(const GeneratorOptions& opts) {
  const auto ngf = opts.ngf;
  const auto g = opts.norm_groups;
  if ((2 * ngf) % g != 0 || ngf % g != 0)
    throw ShapeError("ngf must be divisible by the group-norm group count");
  tdga = register_module("tdga", Tdga(4 * ngf));
  blocks = register_module("blocks", nn::Sequential());
  for (std::int64_t i = 0; i < opts.decoder_blocks; ++i) blocks->push_back(ResidualBlock(4 * ngf));
  auto up_conv = [](std::int64_t in, std::int64_t out) {
    return nn::ConvTranspose2d(
        nn::ConvTranspose2dOptions(in, out, 3).stride(2).padding(1).output_padding(1));
  };
  up = register_module("up", nn::Sequential(up_conv(4 * ngf, 2 * ngf), nn::GroupNorm(g, 2 * ngf),
                                            nn::ReLU(), up_conv(2 * ngf, ngf),
                                            nn::GroupNorm(g, ngf), nn::ReLU()));
  head = register_module("head", nn::Sequential(nn::ReflectionPad2d(3), conv(ngf, 3, 7), nn::Tanh()));
}

torch::Tensor DecoderImpl::forward(const torch::Tensor& features) {
  auto x = tdga->forward(features).features;
  if (!blocks->is_empty()) x = blocks->forward(x);
  return head->forward(up->forward(x));
}

GeneratorImpl::GeneratorImpl(const GeneratorOptions& opts) : opts_(opts) {
  encoder = register_module("encoder", Encoder(opts));
  decoder = register_module("decoder", Decoder(opts));
}

Encoding GeneratorImpl::encode(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != 3) throw ShapeError("generator input must be [N, 3, H, W]");
  if (x.size(2) % kGeneratorSizeMultiple != 0 || x.size(3) % kGeneratorSizeMultiple != 0)
    throw ShapeError("generator input " + std::to_string(x.size(2)) + "x" +
                     std::to_string(x.size(3)) + " must have sides divisible by " +
                     std::to_string(kGeneratorSizeMultiple));
  return encoder->forward(x);
}

torch::Tensor GeneratorImpl::decode(const torch::Tensor& features) {
  const auto c = 4 * opts_.ngf;
  if (features.dim() != 4 || features.size(1) != c)
    throw ShapeError("decoder expects [N, " + std::to_string(c) + ", h, w] features");
  return decoder->forward(features);
}

SNConv2dImpl::SNConv2dImpl(std::int64_t in, std::int64_t out, std::int64_t kernel,
                           std::int64_t stride_, std::int64_t padding_,
                           std::int64_t power_iterations_)
    : stride(stride_), padding(padding_), power_iterations(power_iterations_) {
  weight = register_parameter("weight", torch::randn({out, in, kernel, kernel}) * 0.02);
  bias = register_parameter("bias", torch::zeros({out}));
  namespace F = torch::nn::functional;
  u = register_buffer("u", F::normalize(torch::randn({out}), F::NormalizeFuncOptions().dim(0)));
  v = register_buffer("v", F::normalize(torch::randn({in * kernel * kernel}),
                                        F::NormalizeFuncOptions().dim(0)));
}

void SNConv2dImpl::power_iterate(std::int64_t n) {
  namespace F = torch::nn::functional;
  torch::NoGradGuard guard;
  const auto w = weight.view({weight.size(0), -1});
  const auto opts = F::NormalizeFuncOptions().dim(0).eps(1e-12);
  for (std::int64_t i = 0; i < n; ++i) {
    v.copy_(F::normalize(torch::mv(w.t(), u), opts));
    u.copy_(F::normalize(torch::mv(w, v), opts));
  }
}

torch::Tensor SNConv2dImpl::sigma() const {
  const auto w = weight.view({weight.size(0), -1});
  // Clones keep the autograd graph valid when the buffers are updated in
  // place by a later forward before backward runs.
  return torch::dot(u.clone(), torch::mv(w, v.clone()));
}

torch::Tensor SNConv2dImpl::normalized_weight() const { return weight / sigma(); }

torch::Tensor SNConv2dImpl::forward(const torch::Tensor& x) {
  if (is_training()) power_iterate(power_iterations);
  return torch::conv2d(x, normalized_weight(), bias, stride, padding);
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(std::int64_t in_channels,
                                               const DiscriminatorOptions& opts) {
  const auto ndf = opts.ndf;
  const std::int64_t widths[] = {in_channels, ndf, 2 * ndf, 4 * ndf, 8 * ndf, 1};
  const std::int64_t strides[] = {2, 2, 2, 1, 1};
  for (int i = 0; i < 5; ++i) {
    convs.push_back(register_module("conv" + std::to_string(i),
                                    SNConv2d(widths[i], widths[i + 1], 4, strides[i], 1,
                                             opts.power_iterations)));
  }
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& x) {
  auto h = x;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    h = convs[i]->forward(h);
    if (i + 1 < convs.size()) h = torch::leaky_relu(h, 0.2);
  }
  return h;
}

DiscriminatorViews discriminator_views(const torch::Tensor& images) {
  if (images.dim() != 4 || images.size(1) != 3)
    throw ShapeError("discriminator input must be [N, 3, H, W]");
  return {images, images.mean(1, /*keepdim=*/true), gradient_magnitude(images)};
}

DiscriminatorImpl::DiscriminatorImpl(const DiscriminatorOptions& opts) {
  color = register_module("color", PatchDiscriminator(3, opts));
  luminance = register_module("luminance", PatchDiscriminator(1, opts));
  gradient = register_module("gradient", PatchDiscriminator(1, opts));
}

ScoreGrids DiscriminatorImpl::forward(const torch::Tensor& images) {
  auto views = discriminator_views(images);
  return {color->forward(views.rgb), luminance->forward(views.luminance),
          gradient->forward(views.gradient)};
}

std::vector<std::string> norm_layer_sequence(const torch::nn::Module& m) {
  std::vector<std::string> out;
  for (const auto& child : m.modules(/*include_self=*/true)) {
    if (child->as<nn::InstanceNorm2d>()) out.emplace_back("instance");
    if (child->as<nn::GroupNorm>()) out.emplace_back("group");
    if (child->as<nn::BatchNorm2d>()) out.emplace_back("batch");
  }
  return out;
}

void init_weights(torch::nn::Module& m) {
  torch::NoGradGuard guard;
  for (auto& child : m.modules(/*include_self=*/true)) {
    if (auto* c = child->as<nn::Conv2d>()) {
      c->weight.normal_(0.0, 0.02);
      if (c->bias.defined()) c->bias.zero_();
    } else if (auto* t = child->as<nn::ConvTranspose2d>()) {
      t->weight.normal_(0.0, 0.02);
      if (t->bias.defined()) t->bias.zero_();
    } else if (auto* g = child->as<nn::GroupNorm>()) {
      g->weight.fill_(1.0);
      g->bias.zero_();
    }
  }
}

}  // namespace pearlgan
