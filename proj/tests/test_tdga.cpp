#include <random>

#include "doctest.h"

#include "oracles.hpp"
#include "pearlgan/errors.hpp"
#include "pearlgan/tdga.hpp"

using namespace pearlgan;

namespace {

using Maps = std::array<torch::Tensor, kPyramidScales>;

void zero_heads(Tdga& t, double bias) {
  torch::NoGradGuard g;
  for (auto& h : t->heads) {
    h->conv->weight.zero_();
    h->conv->bias.fill_(bias);
  }
}

oracle::Plane upsample2(const oracle::Plane& p) {
  oracle::Plane out(p.size() * 2, std::vector<double>(p[0].size() * 2));
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < out[i].size(); ++j) out[i][j] = p[i / 2][j / 2];
  return out;
}

}  // namespace

TEST_SUITE("tdga") {

TEST_CASE("split_features partitions channels into four groups") {
  torch::manual_seed(0);
  Tdga small(8);
  auto g = small->split_features(torch::randn({1, 8, 4, 4}));
  for (const auto& x : g) CHECK(x.sizes() == torch::IntArrayRef({1, 2, 4, 4}));

  Tdga wide(256);
  auto x = torch::randn({1, 256, 16, 16});
  auto groups = wide->split_features(x);
  for (const auto& t : groups) CHECK(t.size(1) == 64);
  auto whole = wide->split_conv->forward(x);
  CHECK(torch::equal(torch::cat({groups[0], groups[1], groups[2], groups[3]}, 1), whole));

  CHECK_THROWS_AS(Tdga(6), ShapeError);
}

TEST_CASE("statistical pyramid") {
  auto v = torch::arange(1, 17, torch::kFloat32).view({1, 1, 4, 4});
  Maps groups{v, v.clone(), v.clone(), v.clone()};
  // Only level 1 fits a 4x4 group; check it directly by hand.
  auto level1 = torch::nn::functional::avg_pool2d(v, torch::nn::functional::AvgPool2dFuncOptions(2).stride(2));
  CHECK(torch::equal(level1, torch::tensor({3.5f, 5.5f, 11.5f, 13.5f}).view({1, 1, 2, 2})));
  CHECK_THROWS_AS(TdgaImpl::stat_pyramid(groups), ShapeError);

  Maps g32;
  for (auto& t : g32) t = torch::randn({1, 3, 32, 32});
  auto lv = TdgaImpl::stat_pyramid(g32);
  CHECK(lv[0].sizes() == torch::IntArrayRef({1, 3, 16, 16}));
  CHECK(lv[3].sizes() == torch::IntArrayRef({1, 3, 2, 2}));
  // Level 1 of the 1..16 example through the pyramid itself.
  Maps g16;
  for (auto& t : g16) t = torch::zeros({1, 1, 16, 16});
  g16[0].narrow(2, 0, 4).narrow(3, 0, 4).copy_(v[0][0]);
  auto lv16 = TdgaImpl::stat_pyramid(g16);
  CHECK(torch::equal(lv16[0].narrow(2, 0, 2).narrow(3, 0, 2), torch::tensor({3.5f, 5.5f, 11.5f, 13.5f}).view({1, 1, 2, 2})));

  Maps constant;
  for (auto& t : constant) t = torch::full({1, 2, 16, 16}, 0.37f);
  for (const auto& l : TdgaImpl::stat_pyramid(constant))
    CHECK((l - 0.37f).abs().max().item<float>() < 1e-7f);
}

TEST_CASE("attention head") {
  torch::manual_seed(1);
  AttentionHead head(4);
  {
    torch::NoGradGuard g;
    head->conv->weight.zero_();
    head->conv->bias.zero_();
  }
  auto x = torch::randn({1, 4, 6, 6});
  CHECK(torch::equal(head->forward(x), torch::full({1, 1, 6, 6}, 0.5f)));
  {
    torch::NoGradGuard g;
    head->conv->bias.fill_(20.0);
  }
  CHECK((head->forward(x) - 1.0f).abs().max().item<float>() < 1e-8f);

  AttentionHead random(5);
  auto y = torch::randn({1, 5, 7, 9});
  const auto got = oracle::to_stack(random->forward(y))[0];
  const auto want = oracle::conv3x3_sigmoid(oracle::to_stack(y), random->conv->weight,
                                            random->conv->bias.item<double>());
  CHECK(oracle::max_abs_diff(got, want) < 1e-6);
  CHECK(random->forward(y).min().item<float>() > 0.0f);
  CHECK(random->forward(y).max().item<float>() < 1.0f);
}

TEST_CASE("cascade attention") {
  torch::manual_seed(2);
  Tdga t(8);
  Maps pyramid;
  for (int s = 1; s <= 4; ++s) pyramid[s - 1] = torch::randn({1, 2, 32 >> s, 32 >> s});

  SUBCASE("all-zero pyramid gives sigmoid(bias) everywhere") {
    Maps zeros;
    for (int s = 0; s < 4; ++s) zeros[s] = torch::zeros_like(pyramid[s]);
    auto maps = t->cascade_attention(zeros);
    for (int i = 0; i < 4; ++i) {
      const double b = t->heads[3 - i]->conv->bias.item<double>();
      CHECK((maps[i] - oracle::sigmoid(b)).abs().max().item<double>() < 1e-6);
    }
  }

  SUBCASE("a zero prior leaves the level unchanged") {
    for (int s = 1; s <= 3; ++s) {
      auto prior = torch::zeros({1, 1, 32 >> (s + 1), 32 >> (s + 1)});
      CHECK(torch::equal(t->guided_attention(s, pyramid[s - 1], prior), t->heads[s - 1]->forward(pyramid[s - 1])));
    }
  }

  SUBCASE("matches a sequential oracle") {
    auto maps = t->cascade_attention(pyramid);
    oracle::Plane prior;
    for (int s = 4; s >= 1; --s) {
      auto level = oracle::to_stack(pyramid[s - 1]);
      if (!prior.empty()) {
        const auto up = upsample2(prior);
        for (auto& ch : level)
          for (std::size_t i = 0; i < ch.size(); ++i)
            for (std::size_t j = 0; j < ch[i].size(); ++j) ch[i][j] += ch[i][j] * up[i][j];
      }
      const auto& head = t->heads[s - 1];
      prior = oracle::conv3x3_sigmoid(level, head->conv->weight, head->conv->bias.item<double>());
      CHECK(oracle::max_abs_diff(oracle::to_stack(maps[4 - s])[0], prior) < 1e-6);
    }
  }
}

TEST_CASE("merge and attention tensor") {
  torch::manual_seed(3);
  Tdga t(16);
  auto f = torch::randn({1, 16, 32, 32});
  auto groups = t->split_features(f);

  Maps zero_maps;
  for (int i = 0; i < 4; ++i) zero_maps[i] = torch::zeros({1, 1, 32 >> (4 - i), 32 >> (4 - i)});
  CHECK(torch::equal(TdgaImpl::merge_groups(groups, zero_maps),
                     torch::cat({groups[3], groups[2], groups[1], groups[0]}, 1)));

  auto out = t->forward(f);
  CHECK(out.features.sizes() == f.sizes());
  CHECK(out.attention.sizes() == torch::IntArrayRef({1, 3, 32, 32}));
  CHECK(out.attention.min().item<float>() > 0.0f);
  CHECK(out.attention.max().item<float>() < 1.0f);
  // Channel order is scale 3, 2, 1.
  CHECK(torch::equal(out.attention.narrow(1, 0, 1), upsample_nearest(out.maps[1], 8)));
  CHECK(torch::equal(out.attention.narrow(1, 2, 1), upsample_nearest(out.maps[3], 2)));
  CHECK(out.maps[0].sizes() == torch::IntArrayRef({1, 1, 2, 2}));
}

TEST_CASE("shape preservation and preconditions") {
  std::mt19937 rng(4);
  std::uniform_int_distribution<int> cq(2, 64), hq(1, 3), wq(1, 3);
  torch::NoGradGuard g;
  for (int i = 0; i < 20; ++i) {
    const auto c = 4 * cq(rng), h = 16 * hq(rng), w = 16 * wq(rng);
    Tdga t(c);
    auto out = t->forward(torch::randn({1, c, h, w}));
    CHECK(out.features.sizes() == torch::IntArrayRef({1, c, h, w}));
    CHECK(out.attention.sizes() == torch::IntArrayRef({1, 3, h, w}));
  }
  Tdga t(8);
  CHECK_THROWS_AS(t->forward(torch::randn({1, 8, 24, 32})), ShapeError);
  CHECK_THROWS_AS(check_tdga_input(torch::randn({1, 6, 16, 16})), ShapeError);
}

TEST_CASE("finite-difference gradient check") {
  torch::manual_seed(5);
  Tdga t(8);
  t->to(torch::kFloat64);
  auto f = torch::randn({1, 8, 16, 16}, torch::kFloat64).requires_grad_(true);
  t->forward(f).features.sum().backward();
  const auto grad = f.grad().clone();

  std::mt19937 rng(6);
  std::uniform_int_distribution<std::int64_t> idx(0, f.numel() - 1);
  const double h = 1e-5;
  torch::NoGradGuard g;
  auto flat = f.detach().clone().view(-1);
  for (int k = 0; k < 10; ++k) {
    const auto i = idx(rng);
    const double x0 = flat[i].item<double>();
    flat[i] = x0 + h;
    const double up = t->forward(flat.view(f.sizes())).features.sum().item<double>();
    flat[i] = x0 - h;
    const double down = t->forward(flat.view(f.sizes())).features.sum().item<double>();
    flat[i] = x0;
    const double numeric = (up - down) / (2 * h);
    const double analytic = grad.view(-1)[i].item<double>();
    const double rel = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-8});
    CHECK(rel <= 1e-4);
  }
}

TEST_CASE("upsample_nearest") {
  auto x = torch::tensor({1.0f, 2.0f, 3.0f, 4.0f}).view({1, 1, 2, 2});
  auto y = upsample_nearest(x, 2);
  CHECK(y.sizes() == torch::IntArrayRef({1, 1, 4, 4}));
  CHECK(y[0][0][1][1].item<float>() == 1.0f);
  CHECK(y[0][0][3][0].item<float>() == 3.0f);
  CHECK(torch::equal(upsample_nearest(x, 1), x));
}

}  // TEST_SUITE
