#include <fstream>

#include "doctest.h"

#include "pearlgan/errors.hpp"
#include "pearlgan/image.hpp"
#include "pearlgan/synthetic.hpp"
#include "test_util.hpp"

using namespace pearlgan;
using testutil::TempDir;

namespace {

torch::Tensor bytes_to_unit(const std::vector<int>& v, std::int64_t c, std::int64_t h, std::int64_t w) {
  std::vector<float> f(v.begin(), v.end());
  return torch::tensor(f).view({c, h, w}) / 255.0f;
}

void write_gray(const std::filesystem::path& p, std::int64_t h, std::int64_t w, int value) {
  write_png(p, torch::full({1, h, w}, value / 255.0f));
}

}  // namespace

TEST_SUITE("core_data") {

TEST_CASE("png round trip keeps 8-bit values and RGB order") {
  TempDir dir("io");
  auto rgb = torch::zeros({3, 2, 3});
  rgb[0][0][0] = 1.0f;          // red
  rgb[1][0][1] = 1.0f;          // green
  rgb[2][1][2] = 128 / 255.0f;  // dim blue
  write_png(dir / "c.png", rgb);
  const auto back = read_image(dir / "c.png", Domain::B_DC);
  CHECK(back.channels() == 3);
  CHECK(torch::equal(back.pixels, rgb));
  CHECK(back.id == "c.png");

  const auto gray = bytes_to_unit({0, 17, 255, 140}, 1, 2, 2);
  write_png(dir / "g.png", gray);
  const auto g = read_image(dir / "g.png", Domain::A_NTIR);
  CHECK(g.channels() == 1);
  CHECK(torch::equal(g.pixels, gray));
}

TEST_CASE("single-channel images are replicated to three channels") {
  Image img{torch::rand({1, 5, 4}), Domain::A_NTIR, "x"};
  const auto three = to_three_channels(img);
  REQUIRE(three.channels() == 3);
  for (int c = 0; c < 3; ++c) CHECK(torch::equal(three.pixels[c], img.pixels[0]));
  const auto again = to_three_channels(three);
  CHECK(torch::equal(again.pixels, three.pixels));
}

TEST_CASE("list_images is sorted and filters extensions") {
  TempDir dir("ls");
  for (const char* n : {"b.png", "a.jpg", "c.JPEG", "z.txt", "m.png"}) std::ofstream(dir / n) << "x";
  std::filesystem::create_directories(dir / "sub.png");
  std::vector<std::string> names;
  for (const auto& p : list_images(dir.path())) names.push_back(p.filename().string());
  CHECK(names == std::vector<std::string>{"a.jpg", "b.png", "c.JPEG", "m.png"});
}

TEST_CASE("load_dataset computes i_max from raw domain-A pixels") {
  TempDir dir("ds");
  std::filesystem::create_directories(dir / "A");
  std::filesystem::create_directories(dir / "B");
  // Independent single-pass max over the bytes we write.
  const std::vector<std::vector<int>> a_bytes = {{3, 90, 12, 0}, {140, 7, 7, 100}, {0, 0, 0, 1}};
  int expect = 0;
  for (std::size_t i = 0; i < a_bytes.size(); ++i) {
    write_png(dir / "A" / ("a" + std::to_string(i) + ".png"), bytes_to_unit(a_bytes[i], 1, 2, 2));
    for (int v : a_bytes[i]) expect = std::max(expect, v);
  }
  write_gray(dir / "B" / "b0.png", 2, 2, 255);
  const auto ds = load_dataset(dir / "A", dir / "B");
  CHECK(ds.i_max == 140.0);
  CHECK(expect == 140);
  CHECK(ds.domain_a.size() == 3);
  CHECK(ds.domain_b.size() == 1);
  for (const auto& img : ds.domain_a) CHECK(img.channels() == 3);

  write_gray(dir / "A" / "a9.png", 2, 2, 255);
  CHECK(load_dataset(dir / "A", dir / "B").i_max == 255.0);
}

TEST_CASE("load_dataset error paths") {
  TempDir dir("dserr");
  std::filesystem::create_directories(dir / "A");
  std::filesystem::create_directories(dir / "B");
  write_gray(dir / "B" / "b.png", 2, 2, 10);

  SUBCASE("empty directory") { CHECK_THROWS_AS(load_dataset(dir / "A", dir / "B"), DataError); }
  SUBCASE("missing directory") { CHECK_THROWS_AS(load_dataset(dir / "nope", dir / "B"), DataError); }
  SUBCASE("all-zero infrared") {
    write_gray(dir / "A" / "a.png", 2, 2, 0);
    try {
      load_dataset(dir / "A", dir / "B");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("i_max must be > 0") != std::string::npos);
    }
  }
  SUBCASE("undecodable file is fatal or skipped per flag") {
    write_gray(dir / "A" / "a.png", 2, 2, 50);
    std::ofstream(dir / "A" / "broken.png") << "not an image";
    try {
      load_dataset(dir / "A", dir / "B");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("broken.png") != std::string::npos);
    }
    const auto ds = load_dataset(dir / "A", dir / "B", LoadOptions{true});
    CHECK(ds.domain_a.size() == 1);
  }
}

TEST_CASE("preprocess sizes, constants and idempotence") {
  const PreprocessConfig cfg;
  Image big{torch::rand({3, 512, 640}), Domain::B_DC, "x"};
  auto out = preprocess(big, cfg);
  CHECK(out.pixels.sizes() == torch::IntArrayRef({3, 288, 360}));
  CHECK(out.pixels.min().item<float>() >= 0.0f);
  CHECK(out.pixels.max().item<float>() <= 1.0f);

  // Already at the resize size: resize is the identity, only the crop acts.
  Image mid{torch::rand({3, 400, 500}), Domain::B_DC, "m"};
  auto cropped = preprocess(mid, cfg);
  CHECK(torch::equal(cropped.pixels, mid.pixels.narrow(1, 56, 288).narrow(2, 70, 360)));
  CHECK(torch::equal(preprocess(cropped, cfg).pixels, cropped.pixels));

  Image flat{torch::full({1, 123, 77}, 0.3f), Domain::A_NTIR, "f"};
  auto f = preprocess(flat, cfg);
  CHECK(f.pixels.sizes() == torch::IntArrayRef({1, 288, 360}));
  CHECK((f.pixels - 0.3f).abs().max().item<float>() < 1e-6f);
}

TEST_CASE("augment crops, flips and is seed-deterministic") {
  Image img{torch::rand({3, 288, 360}), Domain::B_DC, "x"};
  Rng r1(7), r2(7);
  const auto a = augment(img, 256, 0.5, r1);
  const auto b = augment(img, 256, 0.5, r2);
  CHECK(a.pixels.sizes() == torch::IntArrayRef({3, 256, 256}));
  CHECK(torch::equal(a.pixels, b.pixels));

  AugmentParams p{5, 9, true};
  const auto once = apply_augment(img.pixels, p, 256);
  const auto twice = once.flip({2});
  CHECK(torch::equal(twice, img.pixels.narrow(1, 5, 256).narrow(2, 9, 256)));

  Image small{torch::rand({3, 200, 300}), Domain::B_DC, "s"};
  CHECK_THROWS_AS(augment(small, 256, 0.5, r1), ShapeError);
}

TEST_CASE("augment flip rate and offsets are uniform") {
  Rng rng(11);
  std::vector<long> flips(2, 0), tops(5, 0);
  for (int i = 0; i < 4000; ++i) {
    const auto p = draw_augment(260, 300, 256, 0.5, rng);
    REQUIRE(p.top >= 0);
    REQUIRE(p.top <= 4);
    REQUIRE(p.left <= 44);
    ++flips[p.flip];
    ++tops[p.top];
  }
  CHECK(testutil::chi_square_uniform(flips) < 10.83);  // df 1, p = 0.001
  CHECK(testutil::chi_square_uniform(tops) < 18.47);   // df 4, p = 0.001
}

TEST_CASE("unpaired sampling") {
  Rng rng(3);
  UnpairedDataset one;
  one.domain_a.push_back({torch::zeros({3, 2, 2}), Domain::A_NTIR, "a"});
  one.domain_b.push_back({torch::ones({3, 2, 2}), Domain::B_DC, "b"});
  for (int i = 0; i < 5; ++i) {
    auto [a, b] = sample_unpaired_batch(one, rng);
    CHECK(a.id == "a");
    CHECK(b.id == "b");
  }

  Rng x(99), y(99);
  for (int i = 0; i < 20; ++i) CHECK(sample_unpaired_indices(16, 5, x) == sample_unpaired_indices(16, 5, y));

  std::vector<long> counts(16, 0);
  Rng z(5);
  for (int i = 0; i < 1600; ++i) ++counts[sample_unpaired_indices(16, 16, z).first];
  CHECK(testutil::chi_square_uniform(counts) < 37.70);  // df 15, p = 0.001

  CHECK_THROWS_AS(sample_unpaired_indices(0, 3, z), DataError);
}

TEST_CASE("synthetic corpus is complete and deterministic") {
  TempDir d1("syn1"), d2("syn2");
  SyntheticOptions opts;
  opts.count = 3;
  opts.size = 32;
  CHECK(generate_synthetic(d1.path(), opts) == 6);
  generate_synthetic(d2.path(), opts);
  CHECK(list_images(d1 / "A").size() == 3);
  CHECK(list_images(d1 / "B").size() == 3);

  std::ifstream m(d1 / "manifest.tsv");
  std::string line;
  int lines = 0;
  while (std::getline(m, line)) {
    CHECK(line.find('\t') != std::string::npos);
    ++lines;
  }
  CHECK(lines == 6);

  for (const auto* sub : {"A", "B"})
    for (const auto& p : list_images(d1 / sub)) {
      const auto a = read_image(p, Domain::A_NTIR);
      const auto b = read_image(d2 / sub / p.filename().string(), Domain::A_NTIR);
      CHECK(torch::equal(a.pixels, b.pixels));
      CHECK(a.height() == 32);
    }
  CHECK(read_image(list_images(d1 / "A")[0], Domain::A_NTIR).channels() == 1);
  CHECK(read_image(list_images(d1 / "B")[0], Domain::B_DC).channels() == 3);
  CHECK(load_dataset(d1 / "A", d1 / "B").i_max > 0.0);
}

}  // TEST_SUITE
