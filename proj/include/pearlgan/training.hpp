#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "pearlgan/canny.hpp"
#include "pearlgan/edges.hpp"
#include "pearlgan/image.hpp"
#include "pearlgan/losses.hpp"
#include "pearlgan/networks.hpp"

namespace pearlgan {

struct TrainConfig {
  std::string data_a;
  std::string data_b;

  double lr0 = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::int64_t epochs = 80;
  std::int64_t iterations_per_epoch = 0;  // 0: size of the larger domain
  std::int64_t ssim_accs_start_iter = 50000;
  std::int64_t batch_size = 1;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 0;  // 0: only the final checkpoint
  std::int64_t sample_every = 0;      // 0: no sample grids

  LossWeights weights;
  PreprocessConfig preprocess;
  GeneratorOptions generator;
  DiscriminatorOptions discriminator;

  std::int64_t patch_size = 32;
  CannyParams edge_params;
  bool skip_undecodable = false;

  // Laptop-scale preset: 64x64 images used whole (flip only), narrow networks,
  // gates at iteration 100, 2000 iterations.
  static TrainConfig desk();

  void validate() const;

  // Flat key=value view of every field; apply() rejects unknown keys.
  std::map<std::string, std::string> to_map() const;
  void apply(const std::string& key, const std::string& value);
  std::string to_text() const;
  static TrainConfig from_text(const std::string& text);
};

// Documented keys accepted by TrainConfig::apply, in file order.
const std::vector<std::string>& config_keys();

// Parses "key=value" lines ('#' comments and blank lines ignored) into cfg.
void apply_config_text(TrainConfig& cfg, const std::string& text);
void apply_config_file(TrainConfig& cfg, const std::filesystem::path& path);
// "k=v" override.
void apply_override(TrainConfig& cfg, const std::string& kv);

// Constant lr0 for the first half of training, then linear decay to 0 at
// `epochs`. `epoch` may be fractional.
double lr_at(double epoch, const TrainConfig& cfg);

// Both gates open once iteration >= ssim_accs_start_iter.
LossGates loss_gates(std::int64_t iteration, const TrainConfig& cfg);

// Preprocessed training images (unit range, [3, H, W]) and their edge maps.
struct TrainingData {
  std::vector<torch::Tensor> a, b;
  std::vector<torch::Tensor> edges_a, edges_b;
  double i_max = 255.0;

  // Preprocesses every image and extracts edge maps (through `cache` when
  // given).
  static TrainingData build(const UnpairedDataset& ds, const TrainConfig& cfg,
                            EdgeCache* cache = nullptr);
};

struct StepRecord {
  std::int64_t iteration = 0;
  std::int64_t epoch = 0;
  double lr = 0.0;
  LossGates gates;
  LossTerms<double> terms;
  double disc = 0.0;
  double total = 0.0;
  bool sga_a_skipped = false;
  bool sga_b_skipped = false;
};

enum class Direction { AtoB, BtoA };

struct Checkpoint;

// Owns both generators, both discriminators, both Adam optimizers, the
// sampling RNG and the iteration counter. Discriminators are updated
// before generators in every step.
class Trainer {
 public:
  Trainer(TrainConfig cfg, TrainingData data);

  StepRecord step();

  std::int64_t iteration() const { return iteration_; }
  std::int64_t iterations_per_epoch() const { return iterations_per_epoch_; }
  std::int64_t total_iterations() const { return cfg_.epochs * iterations_per_epoch_; }
  const TrainConfig& config() const { return cfg_; }
  double eta_value() const { return eta_; }

  Generator& g_ab() { return g_ab_; }
  Generator& g_ba() { return g_ba_; }
  Discriminator& d_a() { return d_a_; }
  Discriminator& d_b() { return d_b_; }

  // Inference on a unit-range [3, H, W] image; H and W must be multiples of 64.
  torch::Tensor translate(const torch::Tensor& image, Direction dir);
  // Mean |x - G(F(x))| over both directions for a fixed pair, in unit range.
  double cycle_error(const torch::Tensor& a, const torch::Tensor& b);

  // Last step's (x_a, fake_b, rec_a, x_b, fake_a, rec_b) as a 2x3 grid.
  torch::Tensor sample_grid() const;

  Checkpoint to_checkpoint() const;
  void restore(const Checkpoint& ckpt);

 private:
  TrainConfig cfg_;
  TrainingData data_;
  std::int64_t iterations_per_epoch_;
  double eta_;
  Generator g_ab_{nullptr}, g_ba_{nullptr};
  Discriminator d_a_{nullptr}, d_b_{nullptr};
  std::unique_ptr<torch::optim::Adam> opt_g_, opt_d_;
  Rng rng_;
  std::int64_t iteration_ = 0;
  std::vector<torch::Tensor> last_visuals_;
};

// Translation with padding: reflect-pads to the next multiple of 64, runs
// the generator, crops back to the input size.
torch::Tensor translate_padded(Generator& g, const torch::Tensor& image);

// Appends one CSV row per step: iteration,epoch,lr,<components>,disc,
// ssim_gate,accs_gate,total.
class LossLog {
 public:
  explicit LossLog(const std::filesystem::path& path, bool append = false);
  void write(const StepRecord& r);

  static std::string header();
  static std::string row(const StepRecord& r);

 private:
  std::ofstream out_;
};

}  // namespace pearlgan
