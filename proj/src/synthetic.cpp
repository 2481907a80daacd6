#include "pearlgan/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <vector>

#include "pearlgan/errors.hpp"

namespace fs = std::filesystem;

namespace pearlgan {

namespace {

using Colour = std::array<float, 3>;

class Canvas {
 public:
  Canvas(std::int64_t size, int channels)
      : size_(size), channels_(channels), data_(static_cast<std::size_t>(size * size * channels)) {}

  void fill_rect(std::int64_t r0, std::int64_t c0, std::int64_t r1, std::int64_t c1,
                 const Colour& v) {
    r0 = std::clamp<std::int64_t>(r0, 0, size_);
    r1 = std::clamp<std::int64_t>(r1, 0, size_);
    c0 = std::clamp<std::int64_t>(c0, 0, size_);
    c1 = std::clamp<std::int64_t>(c1, 0, size_);
    for (auto r = r0; r < r1; ++r)
      for (auto c = c0; c < c1; ++c) set(r, c, v);
  }

  void fill_ellipse(double cr, double cc, double rr, double rc, const Colour& v) {
    for (std::int64_t r = 0; r < size_; ++r)
      for (std::int64_t c = 0; c < size_; ++c) {
        const double dr = (r - cr) / rr, dc = (c - cc) / rc;
        if (dr * dr + dc * dc <= 1.0) set(r, c, v);
      }
  }

  // Road wedge: widens linearly from the horizon to the bottom edge.
  void fill_road(std::int64_t horizon, double top_half, double bottom_half, const Colour& v) {
    const double mid = size_ / 2.0;
    for (auto r = horizon; r < size_; ++r) {
      const double t = static_cast<double>(r - horizon) / std::max<std::int64_t>(1, size_ - 1 - horizon);
      const double half = top_half + t * (bottom_half - top_half);
      fill_rect(r, static_cast<std::int64_t>(mid - half), r + 1,
                static_cast<std::int64_t>(mid + half) + 1, v);
    }
  }

  void add_noise(Rng& rng, double sigma) {
    std::normal_distribution<float> n(0.0f, static_cast<float>(sigma));
    for (auto& x : data_) x = std::clamp(x + n(rng), 0.0f, 1.0f);
  }

  torch::Tensor to_tensor() const {
    auto hwc = torch::from_blob(const_cast<float*>(data_.data()), {size_, size_, channels_},
                                torch::kFloat32);
    return hwc.permute({2, 0, 1}).clone().contiguous();
  }

 private:
  void set(std::int64_t r, std::int64_t c, const Colour& v) {
    for (int k = 0; k < channels_; ++k)
      data_[static_cast<std::size_t>((r * size_ + c) * channels_ + k)] = v[static_cast<std::size_t>(k)];
  }

  std::int64_t size_;
  int channels_;
  std::vector<float> data_;
};

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Colour grey(float v) { return {v, v, v}; }

}  // namespace

torch::Tensor render_scene(Domain domain, std::int64_t size, Rng& rng) {
  const bool thermal = domain == Domain::A_NTIR;
  Canvas canvas(size, thermal ? 1 : 3);
  const auto s = static_cast<double>(size);
  const auto horizon = static_cast<std::int64_t>(s * uniform(rng, 0.35, 0.5));

  const Colour sky = thermal ? grey(static_cast<float>(uniform(rng, 0.05, 0.15)))
                             : Colour{0.55f, 0.7f, 0.95f};
  const Colour ground = thermal ? grey(0.3f) : Colour{0.3f, 0.45f, 0.25f};
  canvas.fill_rect(0, 0, horizon, size, sky);
  canvas.fill_rect(horizon, 0, size, size, ground);

  const int n_buildings = std::uniform_int_distribution<int>(2, 4)(rng);
  for (int i = 0; i < n_buildings; ++i) {
    const auto left = static_cast<std::int64_t>(uniform(rng, 0.0, 0.8) * s);
    const auto width = static_cast<std::int64_t>(uniform(rng, 0.1, 0.25) * s);
    const auto height = static_cast<std::int64_t>(uniform(rng, 0.1, 0.3) * s);
    const auto shade = static_cast<float>(uniform(rng, 0.3, 0.45));
    const Colour c = thermal ? grey(shade)
                             : Colour{shade + 0.2f, shade + 0.1f, shade};
    canvas.fill_rect(horizon - height, left, horizon + 1, left + width, c);
  }

  const Colour road = thermal ? grey(0.45f) : grey(0.4f);
  canvas.fill_road(horizon, s * 0.05, s * 0.45, road);
  if (!thermal) {
    for (auto r = horizon + 2; r < size; r += 6)
      canvas.fill_rect(r, size / 2 - 1, r + 3, size / 2 + 1, grey(0.95f));
  }

  const int n_cars = std::uniform_int_distribution<int>(1, 3)(rng);
  for (int i = 0; i < n_cars; ++i) {
    const double row = uniform(rng, horizon + 0.1 * s, s * 0.9);
    const double depth = (row - horizon) / std::max(1.0, s - horizon);
    const double w = s * (0.08 + 0.15 * depth), h = w * 0.5;
    const double col = uniform(rng, 0.25 * s, 0.75 * s);
    const Colour c = thermal ? grey(static_cast<float>(uniform(rng, 0.75, 0.9)))
                             : Colour{static_cast<float>(uniform(rng, 0.1, 0.9)),
                                      static_cast<float>(uniform(rng, 0.1, 0.9)),
                                      static_cast<float>(uniform(rng, 0.1, 0.9))};
    canvas.fill_rect(static_cast<std::int64_t>(row - h), static_cast<std::int64_t>(col - w / 2),
                     static_cast<std::int64_t>(row), static_cast<std::int64_t>(col + w / 2), c);
  }

  const int n_people = std::uniform_int_distribution<int>(0, 2)(rng);
  for (int i = 0; i < n_people; ++i) {
    const double row = uniform(rng, horizon + 0.05 * s, s * 0.85);
    const double col = uniform(rng, 0.05 * s, 0.95 * s);
    const double h = s * 0.08;
    const Colour c = thermal ? grey(static_cast<float>(uniform(rng, 0.85, 0.98)))
                             : Colour{0.15f, 0.12f, 0.1f};
    canvas.fill_ellipse(row, col, h, h * 0.35, c);
  }

  canvas.add_noise(rng, 0.02);
  return canvas.to_tensor();
}

std::int64_t generate_synthetic(const fs::path& out, const SyntheticOptions& opts) {
  if (opts.count <= 0 || opts.size <= 0) throw ConfigError("synthetic count and size must be positive");
  fs::create_directories(out / "A");
  fs::create_directories(out / "B");
  std::ofstream manifest(out / "manifest.tsv");
  if (!manifest) throw DataError("cannot write manifest in " + out.string());

  Rng rng(opts.seed);
  std::int64_t written = 0;
  for (const auto domain : {Domain::A_NTIR, Domain::B_DC}) {
    for (std::int64_t i = 0; i < opts.count; ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "%s_%04lld.png", domain_name(domain),
                    static_cast<long long>(i));
      write_png(out / domain_name(domain) / name, render_scene(domain, opts.size, rng));
      manifest << name << '\t' << domain_name(domain) << '\n';
      ++written;
    }
  }
  return written;
}

}  // namespace pearlgan
