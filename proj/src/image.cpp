#include "pearlgan/image.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "pearlgan/errors.hpp"

namespace fs = std::filesystem;

namespace pearlgan {

const char* domain_name(Domain d) { return d == Domain::A_NTIR ? "A" : "B"; }

void PreprocessConfig::validate() const {
  if (resize_width <= 0 || resize_height <= 0 || crop_width <= 0 || crop_height <= 0 ||
      train_crop <= 0)
    throw ConfigError("preprocess sizes must be positive");
  if (crop_width > resize_width || crop_height > resize_height)
    throw ConfigError("crop size exceeds resize size");
  if (train_crop > crop_width || train_crop > crop_height)
    throw ConfigError("train_crop exceeds crop size");
  if (hflip_prob < 0.0 || hflip_prob > 1.0) throw ConfigError("hflip_prob must lie in [0,1]");
}

namespace {

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

// Decoded 8-bit raster plus its raw maximum before any float conversion.
struct RawImage {
  Image image;
  int raw_max = 0;
};

RawImage decode(const fs::path& path, Domain domain) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw DataError("cannot decode image: " + path.string());
  if (m.depth() != CV_8U) throw DataError("unsupported bit depth (need 8-bit): " + path.string());

  int channels = m.channels();
  if (channels == 4) {
    cv::Mat rgb;
    cv::cvtColor(m, rgb, cv::COLOR_BGRA2BGR);
    m = rgb;
    channels = 3;
  }
  if (channels != 1 && channels != 3)
    throw DataError("unsupported channel count in " + path.string());
  if (!m.isContinuous()) m = m.clone();

  double mx = 0;
  cv::minMaxLoc(m.reshape(1), nullptr, &mx);

  auto hwc = torch::from_blob(m.data, {m.rows, m.cols, channels}, torch::kUInt8).clone();
  auto chw = hwc.permute({2, 0, 1}).to(torch::kFloat32).div_(255.0f).contiguous();
  if (channels == 3) chw = chw.flip({0}).contiguous();  // BGR -> RGB

  RawImage out;
  out.image.pixels = chw;
  out.image.domain = domain;
  out.image.id = path.filename().string();
  out.raw_max = static_cast<int>(mx);
  return out;
}

std::vector<RawImage> load_dir(const fs::path& dir, Domain domain, const LoadOptions& opts) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<RawImage> out;
  for (const auto& p : list_images(dir)) {
    try {
      out.push_back(decode(p, domain));
    } catch (const DataError& e) {
      if (!opts.skip_undecodable) throw;
      std::cerr << "warning: skipping " << e.what() << "\n";
    }
  }
  if (out.empty()) throw DataError("no decodable images in " + dir.string());
  return out;
}

}  // namespace

Image read_image(const fs::path& path, Domain domain) { return decode(path, domain).image; }

void write_png(const fs::path& path, const torch::Tensor& chw) {
  auto t = chw.detach().to(torch::kCPU, torch::kFloat32);
  if (t.dim() == 4) t = t.squeeze(0);
  if (t.dim() == 2) t = t.unsqueeze(0);
  const auto c = t.size(0);
  if (c != 1 && c != 3) throw ShapeError("write_png expects 1 or 3 channels");
  if (c == 3) t = t.flip({0});  // RGB -> BGR
  auto bytes = t.clamp(0.0, 1.0).mul(255.0).round().to(torch::kUInt8).permute({1, 2, 0}).contiguous();
  cv::Mat m(static_cast<int>(bytes.size(0)), static_cast<int>(bytes.size(1)),
            c == 3 ? CV_8UC3 : CV_8UC1, bytes.data_ptr<std::uint8_t>());
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), m)) throw DataError("cannot write " + path.string());
}

std::vector<fs::path> list_images(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

Image to_three_channels(Image img) {
  if (img.channels() == 1) img.pixels = img.pixels.expand({3, -1, -1}).contiguous();
  return img;
}

UnpairedDataset load_dataset(const fs::path& dir_a, const fs::path& dir_b,
                             const LoadOptions& opts) {
  auto raw_a = load_dir(dir_a, Domain::A_NTIR, opts);
  auto raw_b = load_dir(dir_b, Domain::B_DC, opts);

  UnpairedDataset ds;
  int i_max = 0;
  for (auto& r : raw_a) {
    i_max = std::max(i_max, r.raw_max);
    ds.domain_a.push_back(to_three_channels(std::move(r.image)));
  }
  for (auto& r : raw_b) ds.domain_b.push_back(to_three_channels(std::move(r.image)));
  if (i_max <= 0) throw DataError("i_max must be > 0: every domain-A image is all zero");
  ds.i_max = i_max;
  return ds;
}

Image preprocess(const Image& img, const PreprocessConfig& cfg) {
  cfg.validate();
  Image out = img;
  if (img.height() == cfg.crop_height && img.width() == cfg.crop_width) {
    out.pixels = img.pixels.clamp(0.0, 1.0).contiguous();
    return out;
  }
  auto x = img.pixels.unsqueeze(0);
  if (img.height() != cfg.resize_height || img.width() != cfg.resize_width) {
    namespace F = torch::nn::functional;
    x = F::interpolate(x, F::InterpolateFuncOptions()
                              .size(std::vector<std::int64_t>{cfg.resize_height, cfg.resize_width})
                              .mode(torch::kBilinear)
                              .align_corners(false));
  }
  const auto top = (cfg.resize_height - cfg.crop_height) / 2;
  const auto left = (cfg.resize_width - cfg.crop_width) / 2;
  x = x.narrow(2, top, cfg.crop_height).narrow(3, left, cfg.crop_width);
  out.pixels = x.squeeze(0).clamp(0.0, 1.0).contiguous();
  return out;
}

AugmentParams draw_augment(std::int64_t height, std::int64_t width, std::int64_t crop,
                           double hflip_prob, Rng& rng) {
  if (height < crop || width < crop)
    throw ShapeError("image " + std::to_string(height) + "x" + std::to_string(width) +
                     " is smaller than the training crop " + std::to_string(crop));
  AugmentParams p;
  p.top = std::uniform_int_distribution<std::int64_t>(0, height - crop)(rng);
  p.left = std::uniform_int_distribution<std::int64_t>(0, width - crop)(rng);
  p.flip = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < hflip_prob;
  return p;
}

torch::Tensor apply_augment(const torch::Tensor& t, const AugmentParams& p, std::int64_t crop) {
  const auto h_dim = t.dim() - 2;
  const auto w_dim = t.dim() - 1;
  auto out = t.narrow(h_dim, p.top, crop).narrow(w_dim, p.left, crop);
  if (p.flip) out = out.flip({w_dim});
  return out.contiguous();
}

Image augment(const Image& img, std::int64_t crop, double hflip_prob, Rng& rng) {
  auto p = draw_augment(img.height(), img.width(), crop, hflip_prob, rng);
  Image out = img;
  out.pixels = apply_augment(img.pixels, p, crop);
  return out;
}

std::pair<std::size_t, std::size_t> sample_unpaired_indices(std::size_t n_a, std::size_t n_b,
                                                            Rng& rng) {
  if (n_a == 0 || n_b == 0) throw DataError("cannot sample from an empty domain");
  const auto ia = std::uniform_int_distribution<std::size_t>(0, n_a - 1)(rng);
  const auto ib = std::uniform_int_distribution<std::size_t>(0, n_b - 1)(rng);
  return {ia, ib};
}

std::pair<Image, Image> sample_unpaired_batch(const UnpairedDataset& ds, Rng& rng) {
  auto [ia, ib] = sample_unpaired_indices(ds.domain_a.size(), ds.domain_b.size(), rng);
  return {ds.domain_a[ia], ds.domain_b[ib]};
}

}  // namespace pearlgan
