#include <cstring>
#include <fstream>
#include <random>

#include "doctest.h"
#include "gesture/atn.hpp"
#include "gesture/backbone.hpp"
#include "gesture/error.hpp"
#include "support.hpp"

using namespace gesture;

namespace {

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

Tensor patch_frame(int w, int h, std::array<float, 3> bg, std::array<float, 3> fg, BBox patch) {
  Tensor f({static_cast<std::size_t>(h), static_cast<std::size_t>(w), 3});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool in = x >= patch.x0 && x < patch.x1 && y >= patch.y0 && y < patch.y1;
      for (std::size_t c = 0; c < 3; ++c) f.at(y, x, c) = in ? fg[c] : bg[c];
    }
  }
  return f;
}

// Brute-force stride-2 3x3 conv with padding 1 for one output element.
float conv_element(const Tensor& in, const Tensor& w, float bias, std::size_t o, int oy, int ox) {
  double acc = bias;
  for (std::size_t c = 0; c < in.dim(0); ++c) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const int iy = 2 * oy + ky - 1, ix = 2 * ox + kx - 1;
        if (iy < 0 || ix < 0 || iy >= static_cast<int>(in.dim(1)) || ix >= static_cast<int>(in.dim(2))) continue;
        acc += static_cast<double>(w[((o * in.dim(0) + c) * 3 + ky) * 3 + kx]) * in.at(c, iy, ix);
      }
    }
  }
  return static_cast<float>(std::max(acc, 0.0));
}

}  // namespace

TEST_CASE("atn round trip is bit-exact") {
  test::TempDir dir("atn");
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(-1e6f, 1e6f);
  for (const auto& dims : std::vector<std::vector<std::size_t>>{{1}, {7}, {2, 3}, {4, 1, 5}, {2, 2, 2, 3}}) {
    Tensor t(dims);
    for (auto& v : t.data()) v = u(rng);
    t[0] = -0.0f;
    save_tensor(t, dir / "t.atn");
    const auto back = load_tensor(dir / "t.atn");
    CHECK(back.dims() == t.dims());
    CHECK(std::memcmp(back.data().data(), t.data().data(), 4 * t.size()) == 0);
  }
}

TEST_CASE("atn layout: magic, little-endian header and row-major payload") {
  Tensor t({2, 3}, std::vector<float>{0, 1, 2, 3, 4, 5});
  const auto bytes = encode_tensor(t);
  // 12-byte header, two u32 dims, six f32 values.
  CHECK(bytes.size() == 12 + 2 * 4 + 24);
  CHECK(bytes.substr(0, 4) == "ATNS");
  const std::string expected_header("ATNS\x01\x00\x00\x00\x02\x00\x00\x00\x02\x00\x00\x00\x03\x00\x00\x00", 20);
  CHECK(bytes.substr(0, 20) == expected_header);
  // 5.0f = 0x40A00000, stored LE as the last four bytes.
  CHECK(bytes.substr(bytes.size() - 4) == std::string("\x00\x00\xa0\x40", 4));
  CHECK(decode_tensor(bytes) == t);
}

TEST_CASE("atn rejects malformed files") {
  Tensor t({2, 3}, 1.0f);
  const auto good = encode_tensor(t);
  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK_THROWS_WITH_AS(decode_tensor(bad_magic), "bad magic", DataError);
  CHECK_THROWS_AS(decode_tensor(good.substr(0, good.size() - 1)), DataError);
  CHECK_THROWS_AS(decode_tensor(good + "x"), DataError);
  CHECK_THROWS_AS(decode_tensor(good.substr(0, 8)), DataError);
  auto bad_version = good;
  bad_version[4] = 2;
  CHECK_THROWS_AS(decode_tensor(bad_version), DataError);
  // dims whose product overflows 64 bits
  std::string overflow("ATNS\x01\x00\x00\x00\x03\x00\x00\x00", 12);
  for (int i = 0; i < 3; ++i) overflow += std::string("\xff\xff\xff\xff", 4);
  CHECK_THROWS_AS(decode_tensor(overflow), DataError);
  test::TempDir dir("atnbad");
  write_bytes(dir / "x.atn", bad_magic);
  CHECK_THROWS_AS(load_tensor(dir / "x.atn"), DataError);
  CHECK_THROWS_AS(load_tensor(dir / "missing.atn"), DataError);
}

TEST_CASE("weight bundle round trip") {
  test::TempDir dir("bundle");
  WeightBundle b;
  b.kind = "demo";
  b.meta["units"] = "4";
  b.tensors["W"] = Tensor({2, 2}, std::vector<float>{1, 2, 3, 4});
  b.tensors["b"] = Tensor({2}, std::vector<float>{5, 6});
  save_bundle(b, dir.path());
  const auto back = load_bundle(dir.path());
  CHECK(back.kind == "demo");
  CHECK(back.meta_value("units") == "4");
  CHECK(back.tensor("W") == b.tensors["W"]);
  CHECK(back.tensor("b") == b.tensors["b"]);
  CHECK_THROWS_AS(back.tensor("missing"), DataError);
}

TEST_CASE("zero frame gives zero activations and features") {
  SyntheticBackbone bb(SyntheticBackboneConfig{.seed = 3, .width = 32, .height = 24});
  const std::vector<std::string> all{"stage1", "stage2", "stage3"};
  const auto out = bb.forward(Tensor({24, 32, 3}), all);
  for (const auto& name : all) {
    const auto& s = out.stack(name);
    for (float v : s.maps.values()) CHECK(v == 0.0f);
  }
  for (float v : out.features.values.values()) CHECK(v == 0.0f);
  CHECK(out.features.size() == bb.filters("stage3"));
}

TEST_CASE("gap equals the arithmetic mean of each map") {
  ActivationStack s{"x", Tensor({2, 3, 4}), 8, 6};
  for (std::size_t k = 0; k < 12; ++k) s.maps[k] = 2.0f;
  for (std::size_t k = 12; k < 24; ++k) s.maps[k] = static_cast<float>(k);
  const auto f = global_average_pool(s);
  CHECK(f.values[0] == doctest::Approx(2.0));
  CHECK(f.values[1] == doctest::Approx((12.0 + 23.0) / 2.0));

  SyntheticBackbone bb(SyntheticBackboneConfig{.seed = 1, .width = 40, .height = 40});
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor frame({40, 40, 3});
  for (auto& v : frame.data()) v = u(rng);
  const std::vector<std::string> last{"stage3"};
  const auto out = bb.forward(frame, last);
  const auto& st = out.stack("stage3");
  for (std::size_t i = 0; i < st.filters(); ++i) {
    double sum = 0.0;
    for (std::size_t y = 0; y < st.height(); ++y) {
      for (std::size_t x = 0; x < st.width(); ++x) sum += st.maps.at(i, y, x);
    }
    CHECK(out.features.values[i] == doctest::Approx(sum / static_cast<double>(st.height() * st.width())));
  }
}

TEST_CASE("forward is deterministic and seed-reproducible") {
  SyntheticBackboneConfig cfg{.seed = 5, .width = 48, .height = 40};
  SyntheticBackbone a(cfg), b(cfg);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor frame({40, 48, 3});
  for (auto& v : frame.data()) v = u(rng);
  const std::vector<std::string> all{"stage1", "stage2", "stage3"};
  const auto o1 = a.forward(frame, all);
  const auto o2 = a.forward(frame, all);
  const auto o3 = b.forward(frame, all);
  for (const auto& n : all) {
    CHECK(encode_tensor(o1.stack(n).maps) == encode_tensor(o2.stack(n).maps));
    CHECK(encode_tensor(o1.stack(n).maps) == encode_tensor(o3.stack(n).maps));
  }
  CHECK(a.layer_names() == b.layer_names());
  cfg.seed = 6;
  SyntheticBackbone c(cfg);
  CHECK(encode_tensor(c.forward(frame, all).stack("stage1").maps) != encode_tensor(o1.stack("stage1").maps));
}

TEST_CASE("stage1 matches a brute-force convolution") {
  SyntheticBackbone bb(SyntheticBackboneConfig{.seed = 2, .width = 16, .height = 12, .filters = {3, 2, 2}});
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor frame({12, 16, 3});
  for (auto& v : frame.data()) v = u(rng);
  const std::vector<std::string> l1{"stage1", "stage2"};
  const auto out = bb.forward(frame, l1);
  Tensor chw({3, 12, 16});
  for (std::size_t y = 0; y < 12; ++y) {
    for (std::size_t x = 0; x < 16; ++x) {
      for (std::size_t c = 0; c < 3; ++c) chw.at(c, y, x) = frame.at(y, x, c);
    }
  }
  // Planted red detector: centre-tap weights (1,-1,-1), bias -0.5.
  const auto& s1 = out.stack("stage1");
  CHECK(s1.maps.dims() == std::vector<std::size_t>{7, 6, 8});
  Tensor red({7, 3, 3, 3});
  const std::size_t o = bb.planted_channel(0, 0);
  red[((o * 3 + 0) * 3 + 1) * 3 + 1] = 1.0f;
  red[((o * 3 + 1) * 3 + 1) * 3 + 1] = -1.0f;
  red[((o * 3 + 2) * 3 + 1) * 3 + 1] = -1.0f;
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 8; ++x) {
      CHECK(s1.maps.at(o, y, x) == doctest::Approx(conv_element(chw, red, -0.5f, o, y, x)).epsilon(1e-6));
    }
  }
  // Stage 2 planted channel box-averages the stage-1 planted channel.
  const auto& s2 = out.stack("stage2");
  const std::size_t o2 = bb.planted_channel(1, 0);
  Tensor avg({s2.filters(), s1.filters(), 3, 3});
  for (std::size_t k = 0; k < 9; ++k) avg[(o2 * s1.filters() + o) * 9 + k] = 1.0f / 9.0f;
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 4; ++x) {
      CHECK(s2.maps.at(o2, y, x) == doctest::Approx(conv_element(s1.maps, avg, 0.0f, o2, y, x)).epsilon(1e-6));
    }
  }
}

TEST_CASE("planted detectors fire only on their colour") {
  SyntheticBackbone bb(SyntheticBackboneConfig{.seed = 7, .width = 96, .height = 96});
  const auto detectors = default_planted_detectors();
  const std::vector<std::string> l1{"stage1"};
  for (std::size_t j = 0; j < detectors.size(); ++j) {
    for (std::size_t other = 0; other < detectors.size(); ++other) {
      const auto frame =
          patch_frame(96, 96, {0.45f, 0.45f, 0.45f}, detectors[other].stimulus, BBox::make(30, 40, 62, 72));
      const auto out = bb.forward(frame, l1);
      const auto& map = out.stack("stage1");
      const std::size_t ch = bb.planted_channel(0, j);
      float peak = 0.0f;
      for (std::size_t y = 0; y < map.height(); ++y) {
        for (std::size_t x = 0; x < map.width(); ++x) peak = std::max(peak, map.maps.at(ch, y, x));
      }
      if (j == other) {
        CHECK(peak == doctest::Approx(kPlantedResponse));
      } else {
        CHECK(peak == 0.0f);
      }
    }
  }
}

TEST_CASE("red detector argmax lies inside the red patch footprint") {
  SyntheticBackbone bb;
  const BBox patch = BBox::make(120, 64, 152, 96);
  const auto frame = patch_frame(224, 224, {0.45f, 0.45f, 0.45f}, {1.0f, 0.0f, 0.0f}, patch);
  const std::vector<std::string> layers{"stage1", "stage2", "stage3"};
  const auto out = bb.forward(frame, layers);
  for (const auto& name : layers) {
    const auto& s = out.stack(name);
    const std::size_t ch = bb.planted_channel(name, 0);
    std::size_t by = 0, bx = 0;
    for (std::size_t y = 0; y < s.height(); ++y) {
      for (std::size_t x = 0; x < s.width(); ++x) {
        if (s.maps.at(ch, y, x) > s.maps.at(ch, by, bx)) by = y, bx = x;
      }
    }
    // Map cell centre in input pixels.
    const double sx = 224.0 / static_cast<double>(s.width());
    const double cx = (bx + 0.5) * sx, cy = (by + 0.5) * sx;
    CHECK(cx >= patch.x0);
    CHECK(cx < patch.x1);
    CHECK(cy >= patch.y0);
    CHECK(cy < patch.y1);
  }
}

TEST_CASE("forward rejects bad extents and layers") {
  SyntheticBackbone bb(SyntheticBackboneConfig{.width = 32, .height = 32});
  CHECK_THROWS_AS(bb.forward(Tensor({31, 32, 3})), ParameterError);
  const std::vector<std::string> bad{"stage9"};
  CHECK_THROWS_AS(bb.forward(Tensor({32, 32, 3}), bad), ParameterError);
  const auto out = bb.forward(Tensor({32, 32, 3}));
  CHECK_THROWS_AS(out.stack("stage1"), ParameterError);
}

TEST_CASE("exported activations load through the manifest") {
  // Files laid out the way the external exporter writes them.
  test::TempDir dir("export");
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<float> u(0.0f, 3.0f);
  std::ofstream manifest(dir / "manifest.jsonl");
  std::vector<Tensor> stacks;
  for (int img = 0; img < 5; ++img) {
    Tensor s({4, 3, 5});
    for (auto& v : s.data()) v = u(rng);
    stacks.push_back(s);
    const std::string name = "img" + std::to_string(img);
    save_tensor(s, dir / (name + "_conv.atn"));
    Tensor pooled({4});
    for (std::size_t f = 0; f < 4; ++f) {
      double sum = 0.0;
      for (std::size_t k = 0; k < 15; ++k) sum += s[f * 15 + k];
      pooled[f] = static_cast<float>(sum / 15.0);
    }
    save_tensor(pooled, dir / (name + "_pool.atn"));
    manifest << R"({"image":")" << name << R"(.png","layer":"conv","file":")" << name
             << R"(_conv.atn","dims":[4,3,5]})" << '\n';
    manifest << R"({"image":")" << name << R"(.png","layer":"conv","file":")" << name
             << R"(_pool.atn","dims":[4],"kind":"pooled"})" << '\n';
  }
  manifest.close();
  const auto entries = read_export_manifest(dir / "manifest.jsonl");
  REQUIRE(entries.size() == 10);
  for (std::size_t i = 0; i < entries.size(); i += 2) {
    const auto stack = exported_stack(entries[i], 40, 30);
    CHECK(stack.maps == stacks[i / 2]);
    const auto gap = global_average_pool(stack);
    const auto pooled = load_exported(entries[i + 1]);
    REQUIRE(entries[i + 1].pooled);
    for (std::size_t f = 0; f < 4; ++f) CHECK(std::abs(gap.values[f] - pooled[f]) <= 1e-5);
    CHECK_THROWS_AS(exported_stack(entries[i + 1], 40, 30), DataError);
  }

  // Dims in the manifest must agree with the file.
  std::ofstream wrong(dir / "wrong.jsonl");
  wrong << R"({"image":"a.png","layer":"conv","file":"img0_conv.atn","dims":[4,5,3]})" << '\n';
  wrong.close();
  const auto bad = read_export_manifest(dir / "wrong.jsonl");
  CHECK_THROWS_AS(load_exported(bad.front()), DataError);
}
