#pragma once

#include <cstdint>
#include <vector>

#include <torch/torch.h>

namespace pearlgan {

// Row-major single-channel plane in double precision.
struct GrayPlane {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<double> values;

  double at(std::int64_t r, std::int64_t c) const {
    return values[static_cast<std::size_t>(r * width + c)];
  }
};

// Channel mean of a CHW (or 1xCHW) tensor.
GrayPlane to_gray(const torch::Tensor& chw);

// Thresholds are fractions of the image's maximum gradient magnitude.
struct CannyParams {
  double sigma = 1.4;
  double high = 0.2;
  double low_ratio = 0.5;
};

// Canny edge detector split into the threshold-independent part (Gaussian
// smoothing, 3x3 Sobel, non-maximum suppression), computed once, and the
// hysteresis step, evaluated per threshold pair. Plain double loops with a
// fixed evaluation order, so results are bit-stable.
class CannyDetector {
 public:
  CannyDetector(const GrayPlane& gray, double sigma);

  // Binary mask (0/1), row-major. A pixel survives if it is a local maximum
  // with normalised magnitude > low and is 8-connected through such pixels
  // to one with magnitude > high.
  std::vector<std::uint8_t> edges(double high, double low) const;

  std::int64_t height() const { return height_; }
  std::int64_t width() const { return width_; }
  // Gradient magnitude divided by its maximum (all zero for flat input).
  const std::vector<double>& normalized_magnitude() const { return magnitude_; }
  const std::vector<std::uint8_t>& nms_mask() const { return nms_; }

 private:
  std::int64_t height_;
  std::int64_t width_;
  std::vector<double> magnitude_;
  std::vector<std::uint8_t> nms_;
};

std::vector<std::uint8_t> canny(const GrayPlane& gray, const CannyParams& params);

// 1-D Gaussian taps with radius ceil(3 sigma), normalised to unit sum.
std::vector<double> gaussian_kernel(double sigma);

}  // namespace pearlgan
