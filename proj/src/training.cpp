#include "pearlgan/training.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <sstream>

#include "pearlgan/checkpoint.hpp"
#include "pearlgan/errors.hpp"

namespace fs = std::filesystem;

namespace pearlgan {

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("invalid value '" + v + "' for key '" + key + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError("invalid boolean '" + v + "' for key '" + key + "'");
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Field {
  const char* key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

template <class M>
Field int_field(const char* key, M member) {
  return {key, [member](const TrainConfig& c) { return std::to_string(std::invoke(member, c)); },
          [member, key](TrainConfig& c, const std::string& v) {
            using T = std::remove_reference_t<decltype(std::invoke(member, c))>;
            std::invoke(member, c) = parse_number<T>(key, v);
          }};
}

template <class M>
Field double_field(const char* key, M member) {
  return {key, [member](const TrainConfig& c) { return fmt_double(std::invoke(member, c)); },
          [member, key](TrainConfig& c, const std::string& v) {
            std::invoke(member, c) = parse_number<double>(key, v);
          }};
}

// Nested members are reached through small accessors.
#define PG_NESTED(outer, inner) [](auto& c) -> auto& { return c.outer.inner; }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      {"data_a", [](const TrainConfig& c) { return c.data_a; },
       [](TrainConfig& c, const std::string& v) { c.data_a = v; }},
      {"data_b", [](const TrainConfig& c) { return c.data_b; },
       [](TrainConfig& c, const std::string& v) { c.data_b = v; }},
      double_field("lr0", &TrainConfig::lr0),
      double_field("beta1", &TrainConfig::beta1),
      double_field("beta2", &TrainConfig::beta2),
      int_field("epochs", &TrainConfig::epochs),
      int_field("iterations_per_epoch", &TrainConfig::iterations_per_epoch),
      int_field("ssim_accs_start_iter", &TrainConfig::ssim_accs_start_iter),
      int_field("batch_size", &TrainConfig::batch_size),
      int_field("seed", &TrainConfig::seed),
      int_field("checkpoint_every", &TrainConfig::checkpoint_every),
      int_field("sample_every", &TrainConfig::sample_every),
      double_field("lambda_cyc", PG_NESTED(weights, cyc)),
      double_field("lambda_ssim", PG_NESTED(weights, ssim)),
      double_field("lambda_tv", PG_NESTED(weights, tv)),
      double_field("lambda_att", PG_NESTED(weights, att)),
      double_field("lambda_sga", PG_NESTED(weights, sga)),
      double_field("ad_alpha", PG_NESTED(weights, alpha)),
      double_field("ad_beta", PG_NESTED(weights, beta)),
      int_field("resize_width", PG_NESTED(preprocess, resize_width)),
      int_field("resize_height", PG_NESTED(preprocess, resize_height)),
      int_field("crop_width", PG_NESTED(preprocess, crop_width)),
      int_field("crop_height", PG_NESTED(preprocess, crop_height)),
      int_field("train_crop", PG_NESTED(preprocess, train_crop)),
      double_field("hflip_prob", PG_NESTED(preprocess, hflip_prob)),
      int_field("ngf", PG_NESTED(generator, ngf)),
      int_field("encoder_blocks", PG_NESTED(generator, encoder_blocks)),
      int_field("decoder_blocks", PG_NESTED(generator, decoder_blocks)),
      int_field("norm_groups", PG_NESTED(generator, norm_groups)),
      int_field("ndf", PG_NESTED(discriminator, ndf)),
      int_field("sn_power_iterations", PG_NESTED(discriminator, power_iterations)),
      int_field("patch_size", &TrainConfig::patch_size),
      double_field("edge_sigma", PG_NESTED(edge_params, sigma)),
      double_field("edge_high", PG_NESTED(edge_params, high)),
      double_field("edge_low_ratio", PG_NESTED(edge_params, low_ratio)),
      {"skip_undecodable",
       [](const TrainConfig& c) { return std::string(c.skip_undecodable ? "true" : "false"); },
       [](TrainConfig& c, const std::string& v) { c.skip_undecodable = parse_bool("skip_undecodable", v); }},
  };
  return f;
}

#undef PG_NESTED

}  // namespace

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.epochs = 100;
  c.iterations_per_epoch = 20;
  c.ssim_accs_start_iter = 100;
  c.preprocess.resize_width = 64;
  c.preprocess.resize_height = 64;
  c.preprocess.crop_width = 64;
  c.preprocess.crop_height = 64;
  c.preprocess.train_crop = 64;
  c.generator.ngf = 8;
  c.discriminator.ndf = 16;
  return c;
}

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw ConfigError("lr0 must be > 0");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (epochs <= 0 || epochs % 2 != 0) throw ConfigError("epochs must be positive and even");
  if (iterations_per_epoch < 0) throw ConfigError("iterations_per_epoch must be >= 0");
  if (ssim_accs_start_iter < 0) throw ConfigError("ssim_accs_start_iter must be >= 0");
  if (batch_size != 1) throw ConfigError("batch_size must be 1");
  if (checkpoint_every < 0 || sample_every < 0) throw ConfigError("periods must be >= 0");
  if (patch_size <= 0 || patch_size > preprocess.train_crop)
    throw ConfigError("patch_size must lie in [1, train_crop]");
  if (preprocess.train_crop % kGeneratorSizeMultiple != 0)
    throw ConfigError("train_crop must be a multiple of " + std::to_string(kGeneratorSizeMultiple));
  if (generator.ngf <= 0 || generator.norm_groups <= 0 || generator.ngf % generator.norm_groups != 0)
    throw ConfigError("ngf must be a positive multiple of norm_groups");
  if (generator.encoder_blocks < 0 || generator.decoder_blocks < 0)
    throw ConfigError("residual block counts must be >= 0");
  if (discriminator.ndf <= 0 || discriminator.power_iterations < 1)
    throw ConfigError("ndf and sn_power_iterations must be positive");
  if (!(edge_params.sigma > 0.0) || !(edge_params.high > 0.0) || edge_params.low_ratio <= 0.0 ||
      edge_params.low_ratio > 1.0)
    throw ConfigError("invalid edge detector parameters");
  weights.validate();
  preprocess.validate();
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  std::map<std::string, std::string> m;
  for (const auto& f : fields()) m[f.key] = f.get(*this);
  return m;
}

void TrainConfig::apply(const std::string& key, const std::string& value) {
  for (const auto& f : fields())
    if (key == f.key) {
      f.set(*this, value);
      return;
    }
  throw ConfigError("unknown config key '" + key + "'");
}

std::string TrainConfig::to_text() const {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + "=" + f.get(*this) + "\n";
  return out;
}

TrainConfig TrainConfig::from_text(const std::string& text) {
  TrainConfig c;
  apply_config_text(c, text);
  return c;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.emplace_back(f.key);
    return k;
  }();
  return keys;
}

void apply_override(TrainConfig& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + kv + "'");
  cfg.apply(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
}

void apply_config_text(TrainConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      apply_override(cfg, line);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void apply_config_file(TrainConfig& cfg, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str());
}

// ---------------------------------------------------------------------------
// Schedules

double lr_at(double epoch, const TrainConfig& cfg) {
  const auto total = static_cast<double>(cfg.epochs);
  if (!(epoch >= 0.0) || epoch > total)
    throw std::out_of_range("epoch " + fmt_double(epoch) + " outside [0, " + fmt_double(total) + "]");
  const double half = total / 2.0;
  if (epoch <= half) return cfg.lr0;
  return cfg.lr0 * (total - epoch) / (total - half);
}

LossGates loss_gates(std::int64_t iteration, const TrainConfig& cfg) {
  const double open = iteration >= cfg.ssim_accs_start_iter ? 1.0 : 0.0;
  return {open, open};
}

// ---------------------------------------------------------------------------
// Data

TrainingData TrainingData::build(const UnpairedDataset& ds, const TrainConfig& cfg, EdgeCache* cache) {
  TrainingData d;
  d.i_max = ds.i_max;
  auto add = [&](const Image& raw, std::vector<torch::Tensor>& imgs, std::vector<torch::Tensor>& edges) {
    const auto img = preprocess(raw, cfg.preprocess);
    imgs.push_back(img.pixels);
    edges.push_back(cache ? cache->load_or_detect(img, cfg.edge_params).mask
                          : detect_edges(img, cfg.edge_params).mask);
  };
  for (const auto& img : ds.domain_a) add(img, d.a, d.edges_a);
  for (const auto& img : ds.domain_b) add(img, d.b, d.edges_b);
  return d;
}

// ---------------------------------------------------------------------------
// Trainer

namespace {

std::vector<torch::Tensor> parameters_of(std::initializer_list<torch::nn::Module*> mods) {
  std::vector<torch::Tensor> out;
  for (auto* m : mods)
    for (auto& p : m->parameters()) out.push_back(p);
  return out;
}

// Splits a [2, ...] batch of (real, fake) scores per view.
std::pair<ScoreGrids, ScoreGrids> split_scores(const ScoreGrids& s) {
  ScoreGrids real, fake;
  for (std::size_t v = 0; v < s.size(); ++v) {
    real[v] = s[v].narrow(0, 0, 1);
    fake[v] = s[v].narrow(0, 1, 1);
  }
  return {real, fake};
}

void set_lr(torch::optim::Adam& opt, double lr) {
  for (auto& g : opt.param_groups()) static_cast<torch::optim::AdamOptions&>(g.options()).lr(lr);
}

void save_adam(const torch::optim::Adam& opt, const std::string& prefix,
               std::vector<std::pair<std::string, torch::Tensor>>& out) {
  const auto& params = opt.param_groups().at(0).params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto it = opt.state().find(params[i].unsafeGetTensorImpl());
    if (it == opt.state().end()) continue;
    const auto& st = static_cast<const torch::optim::AdamParamState&>(*it->second);
    const auto key = prefix + std::to_string(i);
    out.emplace_back(key + ".step", torch::tensor({static_cast<float>(st.step())}));
    out.emplace_back(key + ".exp_avg", st.exp_avg());
    out.emplace_back(key + ".exp_avg_sq", st.exp_avg_sq());
  }
}

void load_adam(torch::optim::Adam& opt, const std::string& prefix, const Checkpoint& ckpt) {
  opt.state().clear();
  const auto& params = opt.param_groups().at(0).params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto key = prefix + std::to_string(i);
    if (!ckpt.contains(key + ".step")) continue;
    auto st = std::make_unique<torch::optim::AdamParamState>();
    st->step(static_cast<std::int64_t>(ckpt.at(key + ".step").item<float>()));
    st->exp_avg(ckpt.at(key + ".exp_avg").clone().view(params[i].sizes()));
    st->exp_avg_sq(ckpt.at(key + ".exp_avg_sq").clone().view(params[i].sizes()));
    opt.state()[params[i].unsafeGetTensorImpl()] = std::move(st);
  }
}

}  // namespace

Trainer::Trainer(TrainConfig cfg, TrainingData data)
    : cfg_(std::move(cfg)), data_(std::move(data)), rng_(cfg_.seed) {
  cfg_.validate();
  if (data_.a.empty() || data_.b.empty()) throw DataError("training needs images in both domains");
  if (data_.edges_a.size() != data_.a.size() || data_.edges_b.size() != data_.b.size())
    throw DataError("edge maps do not match the image lists");
  iterations_per_epoch_ = cfg_.iterations_per_epoch > 0
                              ? cfg_.iterations_per_epoch
                              : static_cast<std::int64_t>(std::max(data_.a.size(), data_.b.size()));
  eta_ = eta(data_.i_max);

  torch::manual_seed(cfg_.seed);
  g_ab_ = Generator(cfg_.generator);
  g_ba_ = Generator(cfg_.generator);
  d_a_ = Discriminator(cfg_.discriminator);
  d_b_ = Discriminator(cfg_.discriminator);
  for (torch::nn::Module* m : {static_cast<torch::nn::Module*>(g_ab_.get()),
                               static_cast<torch::nn::Module*>(g_ba_.get())})
    init_weights(*m);

  auto adam = [&](std::vector<torch::Tensor> params) {
    return std::make_unique<torch::optim::Adam>(
        std::move(params), torch::optim::AdamOptions(cfg_.lr0).betas({cfg_.beta1, cfg_.beta2}));
  };
  opt_g_ = adam(parameters_of({g_ab_.get(), g_ba_.get()}));
  opt_d_ = adam(parameters_of({d_a_.get(), d_b_.get()}));
}

StepRecord Trainer::step() {
  const auto& w = cfg_.weights;
  StepRecord rec;
  rec.iteration = iteration_;
  rec.epoch = iteration_ / iterations_per_epoch_;
  rec.lr = lr_at(std::min<double>(static_cast<double>(rec.epoch), static_cast<double>(cfg_.epochs)), cfg_);
  rec.gates = loss_gates(iteration_, cfg_);
  set_lr(*opt_g_, rec.lr);
  set_lr(*opt_d_, rec.lr);

  // Sampling order is fixed: indices, crop/flip of A, crop/flip of B, SGA
  // patch in A, SGA patch in B.
  const auto crop = cfg_.preprocess.train_crop;
  const auto [ia, ib] = sample_unpaired_indices(data_.a.size(), data_.b.size(), rng_);
  const auto& src_a = data_.a[ia];
  const auto& src_b = data_.b[ib];
  const auto aug_a = draw_augment(src_a.size(1), src_a.size(2), crop, cfg_.preprocess.hflip_prob, rng_);
  const auto aug_b = draw_augment(src_b.size(1), src_b.size(2), crop, cfg_.preprocess.hflip_prob, rng_);
  const auto unit_a = apply_augment(src_a, aug_a, crop).unsqueeze(0);
  const auto unit_b = apply_augment(src_b, aug_b, crop).unsqueeze(0);
  const auto edges_a = apply_augment(data_.edges_a[ia], aug_a, crop);
  const auto edges_b = apply_augment(data_.edges_b[ib], aug_b, crop);
  const auto x_a = from_unit(unit_a);
  const auto x_b = from_unit(unit_b);

  std::optional<EdgePatch> patch_a, patch_b;
  try {
    patch_a = sample_edge_patch(edges_a, cfg_.patch_size, rng_);
  } catch (const NoEdgesError&) {
    rec.sga_a_skipped = true;
  }
  try {
    patch_b = sample_edge_patch(edges_b, cfg_.patch_size, rng_);
  } catch (const NoEdgesError&) {
    rec.sga_b_skipped = true;
  }

  // Translations, reconstructions and the encodings of both fakes.
  const auto enc_ra = g_ab_->encode(x_a);
  const auto fake_b = g_ab_->decode(enc_ra.features);
  const auto enc_rb = g_ba_->encode(x_b);
  const auto fake_a = g_ba_->decode(enc_rb.features);
  const auto enc_fb = g_ba_->encode(fake_b);
  const auto rec_a = g_ba_->decode(enc_fb.features);
  const auto enc_fa = g_ab_->encode(fake_a);
  const auto rec_b = g_ab_->decode(enc_fa.features);

  // Discriminators.
  opt_d_->zero_grad();
  {
    auto [real_b, fake_b_s] = split_scores(d_b_->forward(torch::cat({x_b, fake_b.detach()})));
    auto [real_a, fake_a_s] = split_scores(d_a_->forward(torch::cat({x_a, fake_a.detach()})));
    auto disc = adversarial_losses(real_b, fake_b_s).discriminator +
                adversarial_losses(real_a, fake_a_s).discriminator;
    rec.disc = disc.item<double>();
    if (!std::isfinite(rec.disc)) throw NonFiniteLoss("disc", iteration_, rec.disc);
    disc.backward();
    opt_d_->step();
  }

  // Generators.
  opt_g_->zero_grad();
  LossTerms<torch::Tensor> t;
  {
    auto [real_b, fake_b_s] = split_scores(d_b_->forward(torch::cat({x_b, fake_b})));
    auto [real_a, fake_a_s] = split_scores(d_a_->forward(torch::cat({x_a, fake_a})));
    for (auto& s : real_b) s = s.detach();
    for (auto& s : real_a) s = s.detach();
    t.adv = adversarial_losses(real_b, fake_b_s).generator + adversarial_losses(real_a, fake_a_s).generator;
  }

  const auto zero = torch::zeros({});
  const auto unit_fake_a = to_unit(fake_a), unit_fake_b = to_unit(fake_b);
  const auto unit_rec_a = to_unit(rec_a), unit_rec_b = to_unit(rec_b);
  // A weight of zero removes its component entirely (recorded as 0).
  t.cyc_l1 = w.cyc > 0 ? (unit_a - unit_rec_a).abs().mean() + (unit_b - unit_rec_b).abs().mean() : zero;
  t.ssim = w.ssim > 0 ? (1.0 - ssim(unit_a, unit_rec_a)) + (1.0 - ssim(unit_b, unit_rec_b)) : zero;
  t.tv = w.tv > 0 ? tv_loss(unit_fake_b) + tv_loss(unit_fake_a) : zero;
  t.ad = w.att > 0 ? ad_loss(enc_ra.attention, w) + ad_loss(enc_rb.attention, w) : zero;
  t.accs = w.att > 0 ? accs_loss(enc_ra.features, enc_rb.features, enc_fa.features, enc_fb.features,
                                 enc_ra.attention, enc_rb.attention)
                     : zero;
  if (w.sga > 0) {
    std::optional<torch::Tensor> term_a, term_b;
    if (patch_a) {
      const auto g = gradient_magnitude(unit_fake_b);
      term_a = sga_patch_loss(patch_a->values, gradient_patch(g, patch_a->row, patch_a->col, cfg_.patch_size), eta_);
    }
    if (patch_b) {
      const auto g = gradient_magnitude(unit_fake_a);
      term_b = sga_patch_loss(patch_b->values, gradient_patch(g, patch_b->row, patch_b->col, cfg_.patch_size), eta_);
    }
    t.sga = sga_loss(term_a, term_b);
  } else {
    t.sga = zero;
  }

  rec.terms = to_record(t);
  rec.total = total_objective(rec.terms, w, rec.gates);
  check_finite(rec.terms, rec.total, iteration_);

  auto total = total_objective(t, w, rec.gates);
  total.backward();
  opt_g_->step();

  last_visuals_ = {unit_a.detach(), unit_fake_b.detach(), unit_rec_a.detach(),
                   unit_b.detach(), unit_fake_a.detach(), unit_rec_b.detach()};
  ++iteration_;
  return rec;
}

torch::Tensor translate_padded(Generator& g, const torch::Tensor& image) {
  namespace F = torch::nn::functional;
  torch::NoGradGuard guard;
  if (image.dim() != 3 || image.size(0) != 3) throw ShapeError("translate expects a [3, H, W] image");
  const auto h = image.size(1), w = image.size(2);
  const auto m = kGeneratorSizeMultiple;
  const auto ph = (m - h % m) % m, pw = (m - w % m) % m;
  auto x = from_unit(image).unsqueeze(0);
  if (ph || pw) {
    const bool reflect = ph < h && pw < w;
    auto opts = F::PadFuncOptions({0, pw, 0, ph});
    if (reflect)
      opts.mode(torch::kReflect);
    else
      opts.mode(torch::kReplicate);
    x = F::pad(x, opts);
  }
  auto y = to_unit(g->forward(x)).squeeze(0);
  return y.narrow(1, 0, h).narrow(2, 0, w).clamp(0.0, 1.0).contiguous();
}

torch::Tensor Trainer::translate(const torch::Tensor& image, Direction dir) {
  return translate_padded(dir == Direction::AtoB ? g_ab_ : g_ba_, image);
}

double Trainer::cycle_error(const torch::Tensor& a, const torch::Tensor& b) {
  torch::NoGradGuard guard;
  auto err = [](Generator& fwd, Generator& back, const torch::Tensor& x) {
    auto rec = to_unit(back->forward(fwd->forward(from_unit(x).unsqueeze(0)))).squeeze(0);
    return (rec - x).abs().mean().item<double>();
  };
  return 0.5 * (err(g_ab_, g_ba_, a) + err(g_ba_, g_ab_, b));
}

torch::Tensor Trainer::sample_grid() const {
  if (last_visuals_.empty()) return {};
  auto row = [&](std::size_t k) {
    return torch::cat({last_visuals_[k], last_visuals_[k + 1], last_visuals_[k + 2]}, 3);
  };
  return torch::cat({row(0), row(3)}, 2).squeeze(0);
}

Checkpoint Trainer::to_checkpoint() const {
  Checkpoint c;
  c.iteration = iteration_;
  c.config_text = cfg_.to_text();
  std::ostringstream rs;
  rs << rng_;
  c.rng_state = rs.str();
  collect_module(*g_ab_, "g_ab.", c.tensors);
  collect_module(*g_ba_, "g_ba.", c.tensors);
  collect_module(*d_a_, "d_a.", c.tensors);
  collect_module(*d_b_, "d_b.", c.tensors);
  save_adam(*opt_g_, "opt_g.", c.tensors);
  save_adam(*opt_d_, "opt_d.", c.tensors);
  return c;
}

void Trainer::restore(const Checkpoint& ckpt) {
  const auto saved = TrainConfig::from_text(ckpt.config_text);
  const auto same_arch = saved.generator.ngf == cfg_.generator.ngf &&
                         saved.generator.encoder_blocks == cfg_.generator.encoder_blocks &&
                         saved.generator.decoder_blocks == cfg_.generator.decoder_blocks &&
                         saved.generator.norm_groups == cfg_.generator.norm_groups &&
                         saved.discriminator.ndf == cfg_.discriminator.ndf;
  if (!same_arch) throw CheckpointError("checkpoint architecture does not match the configuration");
  restore_module(*g_ab_, "g_ab.", ckpt);
  restore_module(*g_ba_, "g_ba.", ckpt);
  restore_module(*d_a_, "d_a.", ckpt);
  restore_module(*d_b_, "d_b.", ckpt);
  load_adam(*opt_g_, "opt_g.", ckpt);
  load_adam(*opt_d_, "opt_d.", ckpt);
  std::istringstream rs(ckpt.rng_state);
  rs >> rng_;
  if (!rs) throw CheckpointError("corrupt RNG state in checkpoint");
  iteration_ = ckpt.iteration;
  last_visuals_.clear();
}

// ---------------------------------------------------------------------------
// Logging

LossLog::LossLog(const fs::path& path, bool append) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const bool fresh = !append || !fs::exists(path);
  out_.open(path, append ? std::ios::app : std::ios::trunc);
  if (!out_) throw DataError("cannot open loss log " + path.string());
  if (fresh) out_ << header() << '\n';
}

void LossLog::write(const StepRecord& r) {
  out_ << row(r) << '\n';
  out_.flush();
}

std::string LossLog::header() {
  std::string h = "iteration,epoch,lr";
  LossTerms<double>{}.for_each([&](const char* name, double) { h += std::string(",") + name; });
  return h + ",disc,ssim_gate,accs_gate,total";
}

std::string LossLog::row(const StepRecord& r) {
  std::ostringstream o;
  o << std::setprecision(9) << r.iteration << ',' << r.epoch << ',' << r.lr;
  r.terms.for_each([&](const char*, double v) { o << ',' << v; });
  o << ',' << r.disc << ',' << r.gates.ssim << ',' << r.gates.accs << ',' << r.total;
  return o.str();
}

}  // namespace pearlgan
