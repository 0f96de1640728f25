#include "doctest.h"
#include "gesture/error.hpp"
#include "gesture/workflows.hpp"
#include "support.hpp"
#include "toy_data.hpp"

using namespace gesture;

namespace {

GenerateOptions small(std::size_t scenes, std::size_t sequences) {
  GenerateOptions o;
  o.scenes = scenes;
  o.pinch_sequences = sequences;
  o.pinch_frames = 8;
  o.scene.width = o.scene.height = 64;
  o.scene.min_size = 10;
  o.scene.max_size = 12;
  o.seed = 5;
  return o;
}

}  // namespace

TEST_CASE("generate_dataset writes frames and a manifest that reads back") {
  test::TempDir dir("gen");
  const auto records = generate_dataset(dir.path(), small(12, 3));
  CHECK(records.size() == 12 + 3 * 8);
  const auto back = read_manifest(dir / "manifest.jsonl");
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].id == records[i].id);
    CHECK(std::filesystem::exists(back[i].frame));
  }
  CHECK(records[0].gesture == "Point");
  CHECK(records[5].gesture == "None");
  const auto loaded = load_samples(back);
  CHECK(loaded[0].frame.dims() == std::vector<std::size_t>{64, 64, 3});

  test::TempDir again("gen");
  const auto same = generate_dataset(again.path(), small(12, 3));
  for (std::size_t i = 0; i < same.size(); ++i) CHECK(load_frame(same[i].frame) == loaded[i].frame);

  auto bad = small(1, 0);
  bad.format = ".png";
  CHECK_THROWS_AS(generate_dataset(dir.path(), bad), ParameterError);
}

TEST_CASE("sample builders") {
  test::TempDir dir("samples");
  const auto records = generate_dataset(dir.path(), small(12, 3));
  const auto loaded = load_samples(records);
  SyntheticBackboneConfig cfg;
  cfg.width = cfg.height = 64;
  cfg.filters = {4, 4, 4};
  const SyntheticBackbone bb(cfg);

  const auto reg = LabelRegistry::standard();
  const auto cls = classifier_samples(bb, loaded, reg);
  REQUIRE(cls.size() == loaded.size());
  CHECK(cls[0].label == labels::Point);
  CHECK(cls[0].features.size() == bb.filters("stage3"));

  const auto points = fingertip_frames(loaded, "Point");
  CHECK(points.size() == 2);
  for (const auto& f : points) CHECK(f.truths.size() == 1);
  CHECK(fingertip_frames(loaded, "Drag").front().truths.size() == 2);

  // 3 sequences of 8 frames: one pair per frame, then d - 1 and d + 1 partners
  // for the frames past warm-up (t >= 5: 3 frames, t - 6 exists for t >= 6: 2).
  const auto plain = pinch_samples(bb, loaded, 5);
  CHECK(plain.size() == 24);
  const auto varied = pinch_samples(bb, loaded, 5, 1, 3);
  CHECK(varied.size() == 24 * 2 + 3 * (3 + 2));
  CHECK_THROWS_AS(pinch_samples(bb, loaded, 0), ParameterError);
}
