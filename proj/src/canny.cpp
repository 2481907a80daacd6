#include "pearlgan/canny.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pearlgan/errors.hpp"

namespace pearlgan {

GrayPlane to_gray(const torch::Tensor& chw) {
  auto t = chw.detach().to(torch::kCPU, torch::kFloat64);
  if (t.dim() == 4) t = t.squeeze(0);
  if (t.dim() == 2) t = t.unsqueeze(0);
  if (t.dim() != 3) throw ShapeError("to_gray expects a CHW tensor");
  t = t.mean(0).contiguous();
  GrayPlane g;
  g.height = t.size(0);
  g.width = t.size(1);
  const double* p = t.data_ptr<double>();
  g.values.assign(p, p + g.height * g.width);
  return g;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

namespace {

std::int64_t clampi(std::int64_t v, std::int64_t hi) { return std::clamp<std::int64_t>(v, 0, hi - 1); }

std::vector<double> smooth(const GrayPlane& g, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const auto radius = static_cast<std::int64_t>(k.size() / 2);
  const auto h = g.height, w = g.width;
  std::vector<double> tmp(g.values.size()), out(g.values.size());
  for (std::int64_t r = 0; r < h; ++r)
    for (std::int64_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (std::int64_t i = -radius; i <= radius; ++i)
        acc += k[static_cast<std::size_t>(i + radius)] * g.at(r, clampi(c + i, w));
      tmp[static_cast<std::size_t>(r * w + c)] = acc;
    }
  for (std::int64_t r = 0; r < h; ++r)
    for (std::int64_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (std::int64_t i = -radius; i <= radius; ++i)
        acc += k[static_cast<std::size_t>(i + radius)] * tmp[static_cast<std::size_t>(clampi(r + i, h) * w + c)];
      out[static_cast<std::size_t>(r * w + c)] = acc;
    }
  return out;
}

}  // namespace

CannyDetector::CannyDetector(const GrayPlane& gray, double sigma)
    : height_(gray.height), width_(gray.width) {
  if (height_ <= 0 || width_ <= 0) throw ShapeError("Canny input is empty");
  if (!(sigma > 0.0)) throw std::invalid_argument("Canny sigma must be positive");
  const auto h = height_, w = width_;
  const auto n = static_cast<std::size_t>(h * w);
  const auto s = smooth(gray, sigma);
  auto px = [&](std::int64_t r, std::int64_t c) {
    return s[static_cast<std::size_t>(clampi(r, h) * w + clampi(c, w))];
  };

  std::vector<double> gx(n), gy(n);
  magnitude_.assign(n, 0.0);
  double max_mag = 0.0;
  for (std::int64_t r = 0; r < h; ++r)
    for (std::int64_t c = 0; c < w; ++c) {
      const double dx = (px(r - 1, c + 1) + 2.0 * px(r, c + 1) + px(r + 1, c + 1)) -
                        (px(r - 1, c - 1) + 2.0 * px(r, c - 1) + px(r + 1, c - 1));
      const double dy = (px(r + 1, c - 1) + 2.0 * px(r + 1, c) + px(r + 1, c + 1)) -
                        (px(r - 1, c - 1) + 2.0 * px(r - 1, c) + px(r - 1, c + 1));
      const auto i = static_cast<std::size_t>(r * w + c);
      gx[i] = dx;
      gy[i] = dy;
      magnitude_[i] = std::hypot(dx, dy);
      max_mag = std::max(max_mag, magnitude_[i]);
    }

  nms_.assign(n, 0);
  // Flat-input guard: differences of a constant can leave rounding residue.
  if (max_mag <= 1e-12) {
    std::fill(magnitude_.begin(), magnitude_.end(), 0.0);
    return;
  }
  for (auto& m : magnitude_) m /= max_mag;

  auto mag = [&](std::int64_t r, std::int64_t c) {
    if (r < 0 || r >= h || c < 0 || c >= w) return 0.0;
    return magnitude_[static_cast<std::size_t>(r * w + c)];
  };
  for (std::int64_t r = 0; r < h; ++r)
    for (std::int64_t c = 0; c < w; ++c) {
      const auto i = static_cast<std::size_t>(r * w + c);
      const double m = magnitude_[i];
      if (m <= 0.0) continue;
      // Gradient direction folded into [0, 180) and quantised to 4 bins.
      double angle = std::atan2(gy[i], gx[i]) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;
      std::int64_t dr = 0, dc = 0;
      if (angle < 22.5 || angle >= 157.5) {
        dc = 1;
      } else if (angle < 67.5) {
        dr = 1;
        dc = 1;
      } else if (angle < 112.5) {
        dr = 1;
      } else {
        dr = 1;
        dc = -1;
      }
      // Strict on one side, non-strict on the other: plateaus of two equal
      // magnitudes keep exactly one pixel.
      if (m > mag(r - dr, c - dc) && m >= mag(r + dr, c + dc)) nms_[i] = 1;
    }
}

std::vector<std::uint8_t> CannyDetector::edges(double high, double low) const {
  const auto h = height_, w = width_;
  std::vector<std::uint8_t> out(static_cast<std::size_t>(h * w), 0);
  std::vector<std::int64_t> stack;
  for (std::int64_t i = 0; i < h * w; ++i) {
    const auto u = static_cast<std::size_t>(i);
    if (nms_[u] && magnitude_[u] > high && !out[u]) {
      out[u] = 1;
      stack.push_back(i);
      while (!stack.empty()) {
        const auto p = stack.back();
        stack.pop_back();
        const auto r = p / w, c = p % w;
        for (std::int64_t dr = -1; dr <= 1; ++dr)
          for (std::int64_t dc = -1; dc <= 1; ++dc) {
            const auto rr = r + dr, cc = c + dc;
            if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
            const auto q = static_cast<std::size_t>(rr * w + cc);
            if (!out[q] && nms_[q] && magnitude_[q] > low) {
              out[q] = 1;
              stack.push_back(rr * w + cc);
            }
          }
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> canny(const GrayPlane& gray, const CannyParams& params) {
  CannyDetector det(gray, params.sigma);
  return det.edges(params.high, params.high * params.low_ratio);
}

}  // namespace pearlgan
