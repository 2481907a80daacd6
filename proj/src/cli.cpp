#include "pearlgan/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "pearlgan/checkpoint.hpp"
#include "pearlgan/errors.hpp"
#include "pearlgan/image.hpp"
#include "pearlgan/metrics.hpp"
#include "pearlgan/synthetic.hpp"
#include "pearlgan/training.hpp"

namespace fs = std::filesystem;

namespace pearlgan {

namespace {

struct ConfigArgs {
  std::string preset = "full";
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App& app) {
    app.add_option("--preset", preset, "Base configuration before file and overrides")
        ->check(CLI::IsMember({"full", "desk"}))
        ->capture_default_str();
    app.add_option("--config", config_path, "key=value configuration file");
    app.add_option("--override", overrides, "key=value, applied after --config (repeatable)")
        ->allow_extra_args(false);
    app.add_option("--seed", seed, "Overrides the seed key");
  }

  TrainConfig resolve() const {
    TrainConfig cfg = preset == "desk" ? TrainConfig::desk() : TrainConfig{};
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    for (const auto& kv : overrides) apply_override(cfg, kv);
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
  }
};

std::string iter_name(std::int64_t it, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "iter_%07lld%s", static_cast<long long>(it), ext);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  ConfigArgs config;
  std::string out = "run";
  std::string resume;
  std::string edge_cache;
  std::int64_t max_iterations = -1;
  std::int64_t log_every = 0;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const auto cfg = a.config.resolve();
  if (cfg.data_a.empty() || cfg.data_b.empty())
    throw DataError("data_a and data_b must name the two image directories");

  const auto ds = load_dataset(cfg.data_a, cfg.data_b, LoadOptions{cfg.skip_undecodable});
  std::unique_ptr<EdgeCache> cache;
  if (!a.edge_cache.empty()) cache = std::make_unique<EdgeCache>(a.edge_cache);
  Trainer trainer(cfg, TrainingData::build(ds, cfg, cache.get()));
  if (!a.resume.empty()) {
    trainer.restore(read_checkpoint(a.resume));
    out << "resumed from " << a.resume << " at iteration " << trainer.iteration() << "\n";
  }

  const fs::path root = a.out;
  for (const char* d : {"checkpoints", "samples", "logs", "reports"}) fs::create_directories(root / d);
  write_text(root / "logs" / "config.txt", cfg.to_text());
  LossLog log(root / "logs" / "losses.csv", !a.resume.empty());

  auto stop = trainer.total_iterations();
  if (a.max_iterations >= 0) stop = std::min(stop, a.max_iterations);
  const auto log_every = a.log_every > 0 ? a.log_every : std::max<std::int64_t>(1, stop / 20);
  out << "training " << ds.domain_a.size() << " A / " << ds.domain_b.size() << " B images, i_max "
      << ds.i_max << ", eta " << trainer.eta_value() << ", iterations " << trainer.iteration() << ".."
      << stop << "\n";

  std::int64_t sga_skips = 0;
  StepRecord last;
  while (trainer.iteration() < stop) {
    last = trainer.step();
    log.write(last);
    sga_skips += last.sga_a_skipped + last.sga_b_skipped;
    const auto done = trainer.iteration();
    if (cfg.sample_every > 0 && done % cfg.sample_every == 0)
      write_png(root / "samples" / iter_name(done, ".png"), trainer.sample_grid());
    if (cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0)
      save_checkpoint(trainer, root / "checkpoints" / iter_name(done, ".ckpt"));
    if (done % log_every == 0 || done == stop)
      out << "iter " << done << " lr " << last.lr << " total " << last.total << " disc " << last.disc
          << "\n";
  }
  save_checkpoint(trainer, root / "checkpoints" / "final.ckpt");

  nlohmann::json summary;
  summary["iterations"] = trainer.iteration();
  summary["i_max"] = ds.i_max;
  summary["eta"] = trainer.eta_value();
  summary["sga_skipped_patches"] = sga_skips;
  summary["last_total"] = last.total;
  write_text(root / "reports" / "train_summary.json", summary.dump(2) + "\n");
  out << "wrote " << (root / "checkpoints" / "final.ckpt").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TranslateArgs {
  std::string checkpoint;
  std::string input;
  std::string out;
  std::string direction = "a2b";
};

int cmd_translate(const TranslateArgs& a, std::ostream& out) {
  auto gens = load_generators(a.checkpoint);
  const bool a2b = a.direction == "a2b";
  auto& g = a2b ? gens.g_ab : gens.g_ba;
  if (!fs::is_directory(a.input)) throw DataError("not a directory: " + a.input);
  const auto files = list_images(a.input);
  if (files.empty()) throw DataError("no images in " + a.input);
  for (const auto& f : files) {
    auto img = to_three_channels(read_image(f, a2b ? Domain::A_NTIR : Domain::B_DC));
    img = preprocess(img, gens.config.preprocess);
    const auto y = translate_padded(g, img.pixels);
    write_png(fs::path(a.out) / (f.stem().string() + ".png"), y);
  }
  out << "translated " << files.size() << " images (" << a.direction << ") into " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

// Files of both directories keyed by stem; the stem sets must agree.
std::vector<std::pair<fs::path, fs::path>> match_files(const fs::path& src, const fs::path& pred) {
  for (const auto& d : {src, pred})
    if (!fs::is_directory(d)) throw DataError("not a directory: " + d.string());
  std::map<std::string, fs::path> s, p;
  for (const auto& f : list_images(src)) s[f.stem().string()] = f;
  for (const auto& f : list_images(pred)) p[f.stem().string()] = f;
  if (s.empty()) throw DataError("no images in " + src.string());
  std::vector<std::pair<fs::path, fs::path>> pairs;
  for (const auto& [stem, path] : s) {
    auto it = p.find(stem);
    if (it == p.end()) throw DataError("mismatched file sets: '" + stem + "' missing from " + pred.string());
    pairs.emplace_back(path, it->second);
  }
  if (p.size() != s.size()) throw DataError("mismatched file sets: " + pred.string() + " has extra files");
  return pairs;
}

struct ApceArgs {
  ConfigArgs config;
  std::string src;
  std::string pred;
  std::string out = "run";
  bool preprocess_src = false;
};

int cmd_eval_apce(const ApceArgs& a, std::ostream& out) {
  const auto cfg = a.config.resolve();
  std::vector<Image> sources, outputs;
  for (const auto& [s, p] : match_files(a.src, a.pred)) {
    auto src = read_image(s, Domain::A_NTIR);
    if (a.preprocess_src) src = preprocess(src, cfg.preprocess);
    sources.push_back(std::move(src));
    outputs.push_back(read_image(p, Domain::B_DC));
  }
  auto sweep = ThresholdSweep::standard();
  sweep.low_ratio = cfg.edge_params.low_ratio;
  const auto report = apce(std::span<const Image>(sources), std::span<const Image>(outputs), sweep,
                           cfg.edge_params.sigma);
  const auto dir = fs::path(a.out) / "reports";
  write_apce_report(report, dir);
  out << "apce " << report.apce << " over " << report.n_images << " images (" << report.skipped_pairs
      << " skipped terms); report in " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct MiouArgs {
  std::string pred;
  std::string gt;
  std::string out = "run";
  std::int32_t classes = 0;
  std::int32_t ignore = 255;
};

int cmd_eval_miou(const MiouArgs& a, std::ostream& out) {
  // All pixels of the corpus are pooled into one confusion matrix.
  LabelGrid pred, gt;
  pred.height = gt.height = 1;
  std::int64_t n = 0;
  for (const auto& [g, p] : match_files(a.gt, a.pred)) {
    const auto gl = read_label_png(g);
    const auto pl = read_label_png(p);
    if (gl.height != pl.height || gl.width != pl.width)
      throw DataError("label maps differ in size: " + g.filename().string());
    gt.labels.insert(gt.labels.end(), gl.labels.begin(), gl.labels.end());
    pred.labels.insert(pred.labels.end(), pl.labels.begin(), pl.labels.end());
    ++n;
  }
  gt.width = pred.width = static_cast<std::int64_t>(gt.labels.size());
  const auto r = miou(pred, gt, a.classes, a.ignore);

  nlohmann::json j;
  j["miou"] = r.miou;
  j["n_images"] = n;
  j["per_class"] = nlohmann::json::array();
  for (const auto& c : r.per_class) j["per_class"].push_back(c ? nlohmann::json(*c) : nlohmann::json());
  j["confusion"] = r.confusion;
  const auto dir = fs::path(a.out) / "reports";
  write_text(dir / "miou.json", j.dump(2) + "\n");
  out << "miou " << r.miou << " over " << n << " images; report in " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_gen_synthetic(const fs::path& dir, const SyntheticOptions& opts, std::ostream& out) {
  const auto n = generate_synthetic(dir, opts);
  out << "wrote " << n << " images to " << dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Thermal-to-colour translation: training, inference and edge metrics", "pearlgan"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train both generators and discriminators");
  train.config.attach(*c_train);
  c_train->add_option("--out", train.out, "Output root (checkpoints/, samples/, logs/, reports/)")
      ->capture_default_str();
  c_train->add_option("--resume", train.resume, "Continue from a checkpoint");
  c_train->add_option("--edge-cache", train.edge_cache, "Directory caching source edge maps");
  c_train->add_option("--max-iterations", train.max_iterations,
                      "Stop once this many iterations have run (default: full schedule)");
  c_train->add_option("--log-every", train.log_every, "Progress line period (default: 1/20 of the run)");

  TranslateArgs tr;
  auto* c_tr = app.add_subcommand("translate", "Translate a directory of images with a checkpoint");
  c_tr->add_option("--checkpoint", tr.checkpoint)->required();
  c_tr->add_option("--input", tr.input, "Directory of input images")->required();
  c_tr->add_option("--out", tr.out, "Directory for translated PNGs")->required();
  c_tr->add_option("--direction", tr.direction)->check(CLI::IsMember({"a2b", "b2a"}))->capture_default_str();

  ApceArgs ap;
  auto* c_ap = app.add_subcommand("eval-apce", "Average precision of Canny edges");
  ap.config.attach(*c_ap);
  c_ap->add_option("--src", ap.src, "Source images")->required();
  c_ap->add_option("--pred", ap.pred, "Translated images with the same file stems")->required();
  c_ap->add_option("--out", ap.out, "Output root; writes reports/apce.csv and reports/report.json")
      ->capture_default_str();
  c_ap->add_flag("--preprocess-src", ap.preprocess_src,
                 "Resize and centre-crop sources with the configured preprocessing");

  MiouArgs mi;
  auto* c_mi = app.add_subcommand("eval-miou", "Mean IoU of label maps");
  c_mi->add_option("--pred", mi.pred, "Predicted label PNGs")->required();
  c_mi->add_option("--gt", mi.gt, "Ground-truth label PNGs with the same file stems")->required();
  c_mi->add_option("--classes", mi.classes, "Number of classes")->required()->check(CLI::PositiveNumber);
  c_mi->add_option("--ignore", mi.ignore, "Ignore label")->capture_default_str();
  c_mi->add_option("--out", mi.out, "Output root; writes reports/miou.json")->capture_default_str();

  SyntheticOptions syn;
  std::string syn_out;
  auto* c_syn = app.add_subcommand("gen-synthetic", "Write a procedural unpaired A/B corpus");
  c_syn->add_option("--out", syn_out, "Output directory")->required();
  c_syn->add_option("--count", syn.count, "Images per domain")->capture_default_str()->check(CLI::PositiveNumber);
  c_syn->add_option("--size", syn.size, "Square side length")->capture_default_str()->check(CLI::PositiveNumber);
  c_syn->add_option("--seed", syn.seed)->capture_default_str();

  std::vector<std::string> rest(args.rbegin(), args.rend());
  if (!rest.empty()) rest.pop_back();  // program name
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*c_train) return cmd_train(train, out);
    if (*c_tr) return cmd_translate(tr, out);
    if (*c_ap) return cmd_eval_apce(ap, out);
    if (*c_mi) return cmd_eval_miou(mi, out);
    if (*c_syn) return cmd_gen_synthetic(syn_out, syn, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NonFiniteLoss& e) {
    err << "aborted: " << e.what() << "\n";
    return kExitNonFinite;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::out_of_range& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace pearlgan
