#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pearlgan/canny.hpp"
#include "pearlgan/image.hpp"

namespace pearlgan {

// High Canny thresholds 0.01 .. 0.99 in steps of 0.01; low = ratio * high.
struct ThresholdSweep {
  std::vector<double> highs;
  double low_ratio = 0.5;

  static ThresholdSweep standard();
};

struct ThresholdPrecision {
  double high = 0.0;
  double precision = 0.0;          // mean over images with a non-empty source edge set
  std::int64_t included_images = 0;  // 0 -> precision is reported as 0
};

struct MetricReport {
  double apce = 0.0;
  std::vector<ThresholdPrecision> curve;
  std::int64_t skipped_pairs = 0;  // (image, threshold) terms with no source edges
  std::int64_t n_images = 0;
  std::int64_t n_thresholds = 0;
};

// Average precision of Canny edges: for every image i and threshold j,
// |X_ij & Y_ij| / |X_ij| with X from the source and Y from the output.
// Terms with an empty X_ij are excluded and the average renormalised over
// the remaining terms. Throws DataError when every term is excluded and
// ShapeError on a size mismatch.
MetricReport apce(std::span<const GrayPlane> sources, std::span<const GrayPlane> outputs,
                  const ThresholdSweep& sweep = ThresholdSweep::standard(), double sigma = 1.4);

MetricReport apce(std::span<const Image> sources, std::span<const Image> outputs,
                  const ThresholdSweep& sweep = ThresholdSweep::standard(), double sigma = 1.4);

// Writes apce.csv (threshold, mean precision, included images) and
// report.json (apce, skipped_pairs, n_i, n_j) into `dir`.
void write_apce_report(const MetricReport& r, const std::filesystem::path& dir);

struct LabelGrid {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<std::int32_t> labels;
};

struct IouReport {
  // Per-class IoU; nullopt when the class appears in neither map.
  std::vector<std::optional<double>> per_class;
  // Mean over classes present in the ground truth.
  double miou = 0.0;
  // confusion[gt][pred], pred == n_classes counts ignore-labelled predictions.
  std::vector<std::vector<std::int64_t>> confusion;
};

// Pixels whose ground truth is `ignore_label` are skipped. Throws
// std::out_of_range for labels outside [0, n_classes) that are not the
// ignore label, ShapeError on mismatched grids, DataError if the ground
// truth has no valid pixel.
IouReport miou(const LabelGrid& pred, const LabelGrid& gt, std::int32_t n_classes,
               std::int32_t ignore_label = 255);

// Reads a single-channel 8-bit PNG of class indices.
LabelGrid read_label_png(const std::filesystem::path& path);

}  // namespace pearlgan
