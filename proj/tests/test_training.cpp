#include <fstream>

#include "doctest.h"

#include "pearlgan/checkpoint.hpp"
#include "pearlgan/errors.hpp"
#include "pearlgan/synthetic.hpp"
#include "pearlgan/training.hpp"
#include "test_util.hpp"

using namespace pearlgan;

namespace {

TrainConfig tiny_config() {
  auto c = TrainConfig::desk();
  c.generator.encoder_blocks = 1;
  c.generator.decoder_blocks = 1;
  c.discriminator.ndf = 8;
  c.ssim_accs_start_iter = 2;
  c.seed = 5;
  return c;
}

UnpairedDataset tiny_dataset(std::int64_t n = 4) {
  Rng rng(77);
  UnpairedDataset ds;
  for (std::int64_t i = 0; i < n; ++i) {
    ds.domain_a.push_back(to_three_channels({render_scene(Domain::A_NTIR, 64, rng), Domain::A_NTIR, "a"}));
    ds.domain_b.push_back({render_scene(Domain::B_DC, 64, rng), Domain::B_DC, "b"});
  }
  ds.i_max = 255.0;
  return ds;
}

Trainer make_trainer(const TrainConfig& cfg) { return Trainer(cfg, TrainingData::build(tiny_dataset(), cfg)); }

bool same_record(const StepRecord& a, const StepRecord& b) {
  bool same = a.iteration == b.iteration && a.total == b.total && a.disc == b.disc && a.lr == b.lr;
  std::vector<double> va, vb;
  a.terms.for_each([&](const char*, double v) { va.push_back(v); });
  b.terms.for_each([&](const char*, double v) { vb.push_back(v); });
  return same && va == vb;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("config text round trip and overrides") {
  auto c = TrainConfig::desk();
  c.data_a = "/x/A";
  c.lr0 = 1.0 / 3.0;
  c.weights.sga = 0.125;
  c.skip_undecodable = true;
  const auto back = TrainConfig::from_text(c.to_text());
  CHECK(back.to_map() == c.to_map());
  CHECK(back.lr0 == c.lr0);
  CHECK(config_keys().size() == c.to_map().size());

  TrainConfig d;
  apply_config_text(d, "# comment\n\nlambda_sga = 0   # trailing\nepochs=4\n");
  CHECK(d.weights.sga == 0.0);
  CHECK(d.epochs == 4);
  apply_override(d, "epochs=6");
  CHECK(d.epochs == 6);

  CHECK_THROWS_AS(apply_override(d, "no_such_key=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(d, "epochs=abc"), ConfigError);
  CHECK_THROWS_AS(apply_override(d, "epochs"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(d, "lr0=1\nbogus=2\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_file(d, "/nonexistent/cfg"), ConfigError);

  TrainConfig odd;
  odd.epochs = 3;
  CHECK_THROWS_AS(odd.validate(), ConfigError);
  TrainConfig crop;
  crop.preprocess.train_crop = 200;
  CHECK_THROWS_AS(crop.validate(), ConfigError);
  CHECK_NOTHROW(TrainConfig::desk().validate());
  CHECK_NOTHROW(TrainConfig{}.validate());
}

TEST_CASE("learning-rate schedule") {
  TrainConfig c;
  CHECK(lr_at(0, c) == 2e-4);
  CHECK(lr_at(40, c) == 2e-4);
  CHECK(lr_at(80, c) == 0.0);
  CHECK(lr_at(60, c) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK_THROWS_AS(lr_at(-1, c), std::out_of_range);
  CHECK_THROWS_AS(lr_at(81, c), std::out_of_range);

  // Continuous, non-increasing, integral lr0 * 3/4 * epochs.
  double prev = lr_at(0, c), integral = 0.0;
  const int steps = 8000;
  for (int i = 1; i <= steps; ++i) {
    const double e = 80.0 * i / steps;
    const double v = lr_at(e, c);
    CHECK(v <= prev);
    CHECK(prev - v < 1e-7);
    integral += 0.5 * (v + prev) * (80.0 / steps);
    prev = v;
  }
  CHECK(integral == doctest::Approx(2e-4 * 0.75 * 80).epsilon(1e-9));
}

TEST_CASE("loss gates") {
  TrainConfig c;
  CHECK(loss_gates(0, c).ssim == 0.0);
  CHECK(loss_gates(49999, c).accs == 0.0);
  CHECK(loss_gates(50000, c).ssim == 1.0);
  CHECK(loss_gates(50000, c).accs == 1.0);
  auto d = TrainConfig::desk();
  CHECK(loss_gates(99, d).ssim == 0.0);
  CHECK(loss_gates(100, d).ssim == 1.0);
}

TEST_CASE("training data") {
  const auto cfg = tiny_config();
  const auto data = TrainingData::build(tiny_dataset(3), cfg);
  CHECK(data.a.size() == 3);
  CHECK(data.edges_b.size() == 3);
  CHECK(data.a[0].sizes() == torch::IntArrayRef({3, 64, 64}));
  CHECK(data.edges_a[0].sizes() == torch::IntArrayRef({64, 64}));
  CHECK(data.edges_a[0].sum().item<float>() > 0.0f);

  testutil::TempDir dir("tdcache");
  EdgeCache cache(dir.path());
  const auto cached = TrainingData::build(tiny_dataset(3), cfg, &cache);
  for (std::size_t i = 0; i < 3; ++i) CHECK(torch::equal(cached.edges_b[i], data.edges_b[i]));
}

TEST_CASE("one step is deterministic and finite") {
  const auto cfg = tiny_config();
  auto t1 = make_trainer(cfg);
  auto t2 = make_trainer(cfg);
  const auto a = t1.step();
  const auto b = t2.step();
  CHECK(same_record(a, b));
  CHECK(a.iteration == 0);
  CHECK(t1.iteration() == 1);
  a.terms.for_each([](const char*, double v) { CHECK(std::isfinite(v)); });
  CHECK(t1.sample_grid().sizes() == torch::IntArrayRef({3, 128, 192}));
  CHECK(t1.eta_value() == doctest::Approx(0.8));
}

TEST_CASE("recorded total follows the gated weighted sum") {
  const auto cfg = tiny_config();
  auto t = make_trainer(cfg);
  for (int i = 0; i < 3; ++i) {
    const auto r = t.step();
    CHECK(r.gates.ssim == (i >= 2 ? 1.0 : 0.0));
    CHECK(r.terms.ssim > 0.0);  // recorded even while gated off
    CHECK(r.total == total_objective(r.terms, cfg.weights, r.gates));
  }
}

TEST_CASE("zero weights remove their components") {
  auto cfg = tiny_config();
  cfg.weights.sga = 0.0;
  cfg.weights.att = 0.0;
  auto t = make_trainer(cfg);
  const auto r = t.step();
  CHECK(r.terms.sga == 0.0);
  CHECK(r.terms.ad == 0.0);
  CHECK(r.terms.accs == 0.0);
  CHECK(r.terms.cyc_l1 > 0.0);

  auto base = tiny_config();
  base.weights.att = base.weights.sga = base.weights.tv = base.weights.ssim = 0.0;
  auto tb = make_trainer(base);
  const auto rb = tb.step();
  CHECK(rb.total == doctest::Approx(rb.terms.adv + base.weights.cyc * rb.terms.cyc_l1).epsilon(1e-12));
}

TEST_CASE("non-finite input aborts with the component name") {
  const auto cfg = tiny_config();
  auto data = TrainingData::build(tiny_dataset(1), cfg);
  data.a[0] = data.a[0].clone();
  data.a[0][0][10][10] = std::nanf("");
  Trainer t(cfg, data);
  CHECK_THROWS_AS(t.step(), NonFiniteLoss);
}

TEST_CASE("schedule bookkeeping") {
  auto cfg = tiny_config();
  cfg.epochs = 4;
  cfg.iterations_per_epoch = 0;
  auto t = make_trainer(cfg);
  CHECK(t.iterations_per_epoch() == 4);
  CHECK(t.total_iterations() == 16);
  StepRecord r;
  for (int i = 0; i < 13; ++i) r = t.step();
  CHECK(r.epoch == 3);
  CHECK(r.lr == doctest::Approx(cfg.lr0 * 0.5));
}

TEST_CASE("translation pads to the generator multiple") {
  auto t = make_trainer(tiny_config());
  const auto y = t.translate(torch::rand({3, 64, 64}), Direction::AtoB);
  CHECK(y.sizes() == torch::IntArrayRef({3, 64, 64}));
  const auto odd = t.translate(torch::rand({3, 50, 70}), Direction::BtoA);
  CHECK(odd.sizes() == torch::IntArrayRef({3, 50, 70}));
  CHECK(odd.min().item<float>() >= 0.0f);
  CHECK(odd.max().item<float>() <= 1.0f);
  CHECK_THROWS_AS(t.translate(torch::rand({1, 64, 64}), Direction::AtoB), ShapeError);
  CHECK(std::isfinite(t.cycle_error(torch::rand({3, 64, 64}), torch::rand({3, 64, 64}))));
}

TEST_CASE("checkpoint round trip") {
  testutil::TempDir dir("ckpt");
  auto t = make_trainer(tiny_config());
  t.step();
  const auto x = torch::rand({3, 64, 64});
  const auto before = t.translate(x, Direction::AtoB);
  save_checkpoint(t, dir / "c.ckpt");
  CHECK_FALSE(std::filesystem::exists(dir / "c.ckpt.tmp"));

  auto gens = load_generators(dir / "c.ckpt");
  CHECK(torch::equal(translate_padded(gens.g_ab, x), before));
  CHECK(gens.config.to_map() == t.config().to_map());

  const auto ck = read_checkpoint(dir / "c.ckpt");
  CHECK(ck.iteration == 1);
  CHECK(ck.contains("opt_g.0.exp_avg"));
  CHECK_THROWS_AS(ck.at("missing"), CheckpointError);
}

TEST_CASE("corrupt checkpoints are rejected") {
  testutil::TempDir dir("bad");
  auto t = make_trainer(tiny_config());
  save_checkpoint(t, dir / "good.ckpt");
  std::ifstream in(dir / "good.ckpt", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream(dir / name, std::ios::binary) << content;
    return dir / name;
  };
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(read_checkpoint(write("m.ckpt", bad_magic)), CheckpointError);

  auto bad_version = bytes;
  bad_version[8] = 9;
  try {
    read_checkpoint(write("v.ckpt", bad_version));
    FAIL("expected CheckpointError");
  } catch (const CheckpointError& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }
  CHECK_THROWS_AS(read_checkpoint(write("t.ckpt", bytes.substr(0, bytes.size() / 2))), CheckpointError);
  CHECK_THROWS_AS(read_checkpoint(dir / "absent.ckpt"), CheckpointError);

  auto other = tiny_config();
  other.generator.ngf = 16;
  auto t2 = make_trainer(other);
  CHECK_THROWS_AS(t2.restore(read_checkpoint(dir / "good.ckpt")), CheckpointError);
}

TEST_CASE("resume reproduces an uninterrupted run") {
  testutil::TempDir dir("resume");
  const auto cfg = tiny_config();
  auto full = make_trainer(cfg);
  std::vector<StepRecord> reference;
  for (int i = 0; i < 5; ++i) reference.push_back(full.step());

  auto first = make_trainer(cfg);
  for (int i = 0; i < 2; ++i) first.step();
  save_checkpoint(first, dir / "mid.ckpt");

  auto second = make_trainer(cfg);
  second.restore(read_checkpoint(dir / "mid.ckpt"));
  CHECK(second.iteration() == 2);
  for (int i = 2; i < 5; ++i) CHECK(same_record(second.step(), reference[static_cast<std::size_t>(i)]));
}

TEST_CASE("loss log") {
  testutil::TempDir dir("log");
  StepRecord r;
  r.iteration = 3;
  r.terms.adv = 1.5;
  {
    LossLog log(dir / "logs" / "l.csv");
    log.write(r);
  }
  {
    LossLog log(dir / "logs" / "l.csv", true);
    log.write(r);
  }
  std::ifstream in(dir / "logs" / "l.csv");
  std::string header, row;
  std::getline(in, header);
  CHECK(header == "iteration,epoch,lr,adv,cyc_l1,ssim,tv,ad,accs,sga,disc,ssim_gate,accs_gate,total");
  int rows = 0;
  while (std::getline(in, row)) ++rows;
  CHECK(rows == 2);
  CHECK(LossLog::row(r).rfind("3,0,0,1.5,", 0) == 0);
}

}  // TEST_SUITE
