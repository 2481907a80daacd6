#include "pearlgan/losses.hpp"

#include <cmath>

#include "pearlgan/canny.hpp"
#include "pearlgan/errors.hpp"

namespace pearlgan {

namespace F = torch::nn::functional;

void LossWeights::validate() const {
  for (double v : {cyc, ssim, tv, att, sga, alpha, beta})
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("loss weights must be finite and >= 0");
}

LossTerms<double> to_record(const LossTerms<torch::Tensor>& t) {
  auto val = [](const torch::Tensor& x) { return x.defined() ? x.item<double>() : 0.0; };
  LossTerms<double> r;
  r.adv = val(t.adv);
  r.cyc_l1 = val(t.cyc_l1);
  r.ssim = val(t.ssim);
  r.tv = val(t.tv);
  r.ad = val(t.ad);
  r.accs = val(t.accs);
  r.sga = val(t.sga);
  return r;
}

void check_finite(const LossTerms<double>& t, double total, std::int64_t iteration) {
  t.for_each([&](const char* name, double v) {
    if (!std::isfinite(v)) throw NonFiniteLoss(name, iteration, v);
  });
  if (!std::isfinite(total)) throw NonFiniteLoss("total", iteration, total);
}

AdversarialLosses relativistic_ls(const torch::Tensor& real, const torch::Tensor& fake) {
  if (real.sizes() != fake.sizes()) throw ShapeError("real and fake score grids differ in shape");
  const auto mean_real = real.mean();
  const auto mean_fake = fake.mean();
  AdversarialLosses out;
  out.discriminator = (real - mean_fake - 1.0).pow(2).mean() + (fake - mean_real + 1.0).pow(2).mean();
  out.generator = (fake - mean_real - 1.0).pow(2).mean() + (real - mean_fake + 1.0).pow(2).mean();
  return out;
}

AdversarialLosses adversarial_losses(const ScoreGrids& real, const ScoreGrids& fake) {
  AdversarialLosses sum;
  for (std::size_t v = 0; v < real.size(); ++v) {
    auto l = relativistic_ls(real[v], fake[v]);
    sum.generator = sum.generator.defined() ? sum.generator + l.generator : l.generator;
    sum.discriminator = sum.discriminator.defined() ? sum.discriminator + l.discriminator : l.discriminator;
  }
  const double n = static_cast<double>(real.size());
  return {sum.generator / n, sum.discriminator / n};
}

torch::Tensor ssim(const torch::Tensor& x, const torch::Tensor& y) {
  if (x.sizes() != y.sizes()) throw ShapeError("ssim: inputs differ in shape");
  if (x.dim() != 4) throw ShapeError("ssim expects [N, C, H, W]");
  constexpr std::int64_t kWin = 11;
  if (x.size(2) < kWin || x.size(3) < kWin) throw ShapeError("ssim: image smaller than the 11x11 window");
  const auto c = x.size(1);
  const auto taps = gaussian_kernel(1.5);  // radius ceil(4.5) = 5 -> 11 taps
  auto g = torch::tensor(taps, x.options().requires_grad(false));
  auto window = torch::outer(g, g).view({1, 1, kWin, kWin}).expand({c, 1, kWin, kWin});
  auto filt = [&](const torch::Tensor& t) {
    return F::conv2d(t, window, F::Conv2dFuncOptions().groups(c));
  };
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  auto mu_x = filt(x), mu_y = filt(y);
  auto sxx = filt(x * x) - mu_x * mu_x;
  auto syy = filt(y * y) - mu_y * mu_y;
  auto sxy = filt(x * y) - mu_x * mu_y;
  auto map = ((2.0 * mu_x * mu_y + c1) * (2.0 * sxy + c2)) /
             ((mu_x * mu_x + mu_y * mu_y + c1) * (sxx + syy + c2));
  return map.mean();
}

CycleTerms cycle_terms(const torch::Tensor& x, const torch::Tensor& x_rec) {
  if (x.sizes() != x_rec.sizes()) throw ShapeError("cycle loss: inputs differ in shape");
  return {(x - x_rec).abs().mean(), 1.0 - ssim(x, x_rec)};
}

torch::Tensor cycle_loss(const torch::Tensor& x, const torch::Tensor& x_rec, const LossWeights& w) {
  auto t = cycle_terms(x, x_rec);
  return w.cyc * t.l1 + w.ssim * t.ssim;
}

torch::Tensor tv_loss(const torch::Tensor& img) {
  if (img.dim() < 2) throw ShapeError("tv_loss expects at least a 2-D tensor");
  const auto hd = img.dim() - 2, wd = img.dim() - 1;
  const auto h = img.size(hd), w = img.size(wd);
  if (h < 2 || w < 2) throw ShapeError("tv_loss needs an image of at least 2x2");
  auto dv = (img.narrow(hd, 1, h - 1) - img.narrow(hd, 0, h - 1)).abs().mean();
  auto dh = (img.narrow(wd, 1, w - 1) - img.narrow(wd, 0, w - 1)).abs().mean();
  return dh + dv;
}

torch::Tensor ad_loss(const torch::Tensor& attention, const LossWeights& w) {
  if (attention.dim() != 4) throw ShapeError("ad_loss expects [N, n_a, h, w]");
  auto mx = attention.amax(1);
  auto sum = attention.sum(1);
  return w.alpha * ((1.0 - mx) + w.beta * (sum - 1.0).pow(2)).mean();
}

torch::Tensor attention_feature(const torch::Tensor& features, const torch::Tensor& attention) {
  if (features.dim() != 4 || attention.dim() != 4 || features.size(0) != 1 || attention.size(0) != 1)
    throw ShapeError("attention_feature expects [1, c, h, w] features and [1, n_a, H, W] attention");
  auto t = attention;
  const auto h = features.size(2), w = features.size(3);
  if (t.size(2) != h || t.size(3) != w) {
    if (t.size(2) % h != 0 || t.size(3) % w != 0 || t.size(2) / h != t.size(3) / w)
      throw ShapeError("attention tensor resolution is not an integer multiple of the features");
    const auto k = t.size(2) / h;
    t = F::avg_pool2d(t, F::AvgPool2dFuncOptions(k).stride(k));
  }
  auto f = features[0].flatten(1);  // [c, hw]
  auto a = t[0].flatten(1);         // [n_a, hw]
  const double hw = static_cast<double>(f.size(1));
  auto weighted = torch::matmul(a, f.t()) / hw;  // GAP(F * T^k), [n_a, c]
  auto mass = a.mean(1, /*keepdim=*/true);        // GAP(T^k), [n_a, 1]

  auto live = mass >= 1e-6;
  auto raw = torch::where(live, weighted / torch::where(live, mass, torch::ones_like(mass)),
                          torch::zeros_like(weighted));
  auto norm = raw.norm(2, 1, /*keepdim=*/true);
  auto nonzero = norm > 1e-12;
  return torch::where(nonzero, raw / torch::where(nonzero, norm, torch::ones_like(norm)),
                      torch::zeros_like(raw));
}

torch::Tensor dis_term(const torch::Tensor& v) {
  if (v.dim() != 2 || v.size(0) < 2) throw ShapeError("dis_term expects an [n_a >= 2, c] matrix");
  const auto n = static_cast<double>(v.size(0));
  auto q = torch::matmul(v, v.t());
  auto off = (q.sum() - q.diagonal().sum()) / (n * (n - 1.0));
  return off.clamp_min(0.0);
}

torch::Tensor scale_confidence(const torch::Tensor& t_ra, const torch::Tensor& t_rb) {
  if (t_ra.dim() != 4 || t_rb.dim() != 4 || t_ra.size(1) != t_rb.size(1))
    throw ShapeError("scale_confidence expects matching [1, n_a, h, w] tensors");
  return torch::minimum(t_ra[0].flatten(1).amax(1), t_rb[0].flatten(1).amax(1));
}

torch::Tensor accs_domain(const torch::Tensor& v_real, const torch::Tensor& v_fake,
                          const torch::Tensor& w_q) {
  if (v_real.sizes() != v_fake.sizes()) throw ShapeError("accs: attention features differ in shape");
  if (w_q.dim() != 1 || w_q.size(0) != v_real.size(0)) throw ShapeError("accs: W_Q length mismatch");
  auto q = torch::matmul(v_real, v_fake.t());
  auto gap = q.amax(1) - q.diagonal();
  auto relativity = (w_q * gap).sum() / (w_q.sum() + 1e-8);
  return relativity + dis_term(v_real) + dis_term(v_fake);
}

AttentionFeatures build_attention_features(const torch::Tensor& f_ra, const torch::Tensor& f_rb,
                                           const torch::Tensor& f_fa, const torch::Tensor& f_fb,
                                           const torch::Tensor& t_ra, const torch::Tensor& t_rb) {
  AttentionFeatures v;
  v.rara = attention_feature(f_ra, t_ra);
  v.rbrb = attention_feature(f_rb, t_rb);
  v.fbra = attention_feature(f_fb, t_ra);
  v.farb = attention_feature(f_fa, t_rb);
  return v;
}

torch::Tensor accs_loss(const torch::Tensor& f_ra, const torch::Tensor& f_rb,
                        const torch::Tensor& f_fa, const torch::Tensor& f_fb,
                        const torch::Tensor& t_ra, const torch::Tensor& t_rb) {
  auto v = build_attention_features(f_ra, f_rb, f_fa, f_fb, t_ra, t_rb);
  auto w_q = scale_confidence(t_ra, t_rb);
  return accs_domain(v.rara, v.farb, w_q) + accs_domain(v.rbrb, v.fbra, w_q);
}

torch::Tensor sga_patch_loss(const torch::Tensor& edge_patch, const torch::Tensor& gradient_patch,
                             double eta) {
  if (edge_patch.sizes() != gradient_patch.sizes()) throw ShapeError("sga: patch shapes differ");
  auto denom = edge_patch.sum();
  if (!(denom.item<double>() > 0.0)) throw NoEdgesError("sga: edge patch has no edge pixel");
  return (eta * edge_patch - gradient_patch).clamp_min(0.0).sum() / denom;
}

torch::Tensor sga_loss(const std::optional<torch::Tensor>& term_a,
                       const std::optional<torch::Tensor>& term_b) {
  if (term_a && term_b) return *term_a + *term_b;
  if (term_a) return *term_a;
  if (term_b) return *term_b;
  return torch::zeros({});
}

}  // namespace pearlgan
