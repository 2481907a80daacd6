#include "pearlgan/metrics.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>

#include "json.hpp"

#include "pearlgan/errors.hpp"

namespace fs = std::filesystem;

namespace pearlgan {

ThresholdSweep ThresholdSweep::standard() {
  ThresholdSweep s;
  for (int j = 1; j <= 99; ++j) s.highs.push_back(j / 100.0);
  return s;
}

MetricReport apce(std::span<const GrayPlane> sources, std::span<const GrayPlane> outputs,
                  const ThresholdSweep& sweep, double sigma) {
  if (sources.size() != outputs.size())
    throw ShapeError("apce: source and output lists differ in length");
  if (sources.empty()) throw DataError("apce: empty image list");
  if (sweep.highs.empty()) throw std::invalid_argument("apce: empty threshold sweep");

  const auto n_j = sweep.highs.size();
  std::vector<double> sum_per_threshold(n_j, 0.0);
  std::vector<std::int64_t> count_per_threshold(n_j, 0);
  double total = 0.0;
  std::int64_t included = 0;

  MetricReport report;
  report.n_images = static_cast<std::int64_t>(sources.size());
  report.n_thresholds = static_cast<std::int64_t>(n_j);

  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (sources[i].height != outputs[i].height || sources[i].width != outputs[i].width)
      throw ShapeError("apce: image " + std::to_string(i) + " differs in size from its output");
    const CannyDetector src(sources[i], sigma);
    const CannyDetector out(outputs[i], sigma);
    for (std::size_t j = 0; j < n_j; ++j) {
      const double high = sweep.highs[j], low = high * sweep.low_ratio;
      const auto x = src.edges(high, low);
      const auto y = out.edges(high, low);
      std::int64_t nx = 0, both = 0;
      for (std::size_t p = 0; p < x.size(); ++p) {
        nx += x[p];
        both += x[p] & y[p];
      }
      if (nx == 0) {
        ++report.skipped_pairs;
        continue;
      }
      const double precision = static_cast<double>(both) / static_cast<double>(nx);
      total += precision;
      ++included;
      sum_per_threshold[j] += precision;
      ++count_per_threshold[j];
    }
  }
  if (included == 0) throw DataError("apce: no measurable edges in any source image");

  report.apce = total / static_cast<double>(included);
  for (std::size_t j = 0; j < n_j; ++j) {
    ThresholdPrecision tp;
    tp.high = sweep.highs[j];
    tp.included_images = count_per_threshold[j];
    tp.precision = tp.included_images ? sum_per_threshold[j] / static_cast<double>(tp.included_images) : 0.0;
    report.curve.push_back(tp);
  }
  return report;
}

MetricReport apce(std::span<const Image> sources, std::span<const Image> outputs,
                  const ThresholdSweep& sweep, double sigma) {
  std::vector<GrayPlane> s, o;
  s.reserve(sources.size());
  o.reserve(outputs.size());
  for (const auto& img : sources) s.push_back(to_gray(img.pixels));
  for (const auto& img : outputs) o.push_back(to_gray(img.pixels));
  return apce(std::span<const GrayPlane>(s), std::span<const GrayPlane>(o), sweep, sigma);
}

void write_apce_report(const MetricReport& r, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream csv(dir / "apce.csv");
  if (!csv) throw DataError("cannot write " + (dir / "apce.csv").string());
  csv << "threshold,mean_precision,included_images\n" << std::setprecision(17);
  for (const auto& tp : r.curve) csv << tp.high << ',' << tp.precision << ',' << tp.included_images << '\n';

  nlohmann::json j;
  j["apce"] = r.apce;
  j["skipped_pairs"] = r.skipped_pairs;
  j["n_i"] = r.n_images;
  j["n_j"] = r.n_thresholds;
  std::ofstream js(dir / "report.json");
  if (!js) throw DataError("cannot write " + (dir / "report.json").string());
  js << j.dump(2) << '\n';
}

IouReport miou(const LabelGrid& pred, const LabelGrid& gt, std::int32_t n_classes,
               std::int32_t ignore_label) {
  if (pred.height != gt.height || pred.width != gt.width || pred.labels.size() != gt.labels.size())
    throw ShapeError("miou: prediction and ground truth differ in shape");
  if (n_classes <= 0) throw std::invalid_argument("miou: n_classes must be positive");
  const auto n = static_cast<std::size_t>(n_classes);
  auto check = [&](std::int32_t l, const char* which) {
    if (l != ignore_label && (l < 0 || l >= n_classes))
      throw std::out_of_range(std::string("miou: ") + which + " label " + std::to_string(l) +
                              " outside [0, " + std::to_string(n_classes) + ")");
  };

  IouReport r;
  r.confusion.assign(n, std::vector<std::int64_t>(n + 1, 0));
  std::int64_t valid = 0;
  for (std::size_t p = 0; p < gt.labels.size(); ++p) {
    const auto g = gt.labels[p], q = pred.labels[p];
    check(g, "ground-truth");
    check(q, "predicted");
    if (g == ignore_label) continue;
    const auto col = q == ignore_label ? n : static_cast<std::size_t>(q);
    ++r.confusion[static_cast<std::size_t>(g)][col];
    ++valid;
  }
  if (valid == 0) throw DataError("miou: ground truth has no labelled pixel");

  double sum = 0.0;
  int present = 0;
  r.per_class.assign(n, std::nullopt);
  for (std::size_t k = 0; k < n; ++k) {
    std::int64_t gt_count = 0, pred_count = 0;
    for (std::size_t c = 0; c <= n; ++c) gt_count += r.confusion[k][c];
    for (std::size_t g = 0; g < n; ++g) pred_count += r.confusion[g][k];
    const auto tp = r.confusion[k][k];
    const auto uni = gt_count + pred_count - tp;
    if (uni == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(uni);
    r.per_class[k] = iou;
    if (gt_count > 0) {
      sum += iou;
      ++present;
    }
  }
  r.miou = sum / present;
  return r;
}

LabelGrid read_label_png(const fs::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw DataError("cannot decode label map: " + path.string());
  if (m.depth() != CV_8U || m.channels() != 1)
    throw DataError("label map must be single-channel 8-bit: " + path.string());
  LabelGrid g;
  g.height = m.rows;
  g.width = m.cols;
  g.labels.reserve(static_cast<std::size_t>(m.rows) * static_cast<std::size_t>(m.cols));
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) g.labels.push_back(m.at<std::uint8_t>(r, c));
  return g;
}

}  // namespace pearlgan
