#include <random>

#include "doctest.h"
#include "gesture/engine.hpp"
#include "gesture/error.hpp"
#include "gesture/metrics.hpp"
#include "toy_data.hpp"

using namespace gesture;

namespace {

constexpr int kSize = 96;

std::shared_ptr<const SyntheticBackbone> backbone() {
  SyntheticBackboneConfig cfg;
  cfg.width = cfg.height = kSize;
  return std::make_shared<const SyntheticBackbone>(cfg);
}

SessionConfig full_config(const SyntheticBackbone& bb) {
  SessionConfig c;
  c.classifier = toy::planted_classifier(bb);
  c.filter_sets[labels::Point] = FilterSet{"Point", "stage2", {{bb.planted_channel("stage2", 0), 1.0}}, 0.92, 7, 1};
  c.filter_sets[labels::Drag] = c.filter_sets[labels::Point];
  PinchConfig pc;
  pc.channels = bb.filters("stage3");
  pc.height = pc.width = kSize / 8;
  pc.conv_filters = 4;
  pc.fc_units = 4;
  c.pinch = PinchHeadWeights::zeros(pc);
  const std::vector<std::string> corpus{"red mug"};
  c.vocabulary = Vocabulary::build(corpus);
  auto cw = CaptionWeights::zeros(CaptionConfig{bb.filters("stage3"), c.vocabulary->size(), 4, 3});
  cw.out_b[c.vocabulary->index("mug")] = 5.0f;
  c.caption = cw;
  c.max_caption_len = 2;
  return c;
}

// Frames of the given gestures, one scene each, deterministic.
std::vector<Tensor> frames(const Backbone& bb, const std::vector<std::string>& gestures,
                           std::vector<SampleRecord>* records = nullptr) {
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < gestures.size(); ++i) {
    auto [f, r] = toy::scene(bb, gestures[i], 100 + i);
    out.push_back(f);
    if (records) records->push_back(r);
  }
  return out;
}

FrameSource source_of(const std::vector<Tensor>& fs) {
  auto i = std::make_shared<std::size_t>(0);
  return [&fs, i]() -> std::optional<Tensor> {
    if (*i >= fs.size()) return std::nullopt;
    return fs[(*i)++];
  };
}

}  // namespace

TEST_CASE("the planted classifier recognises each synthetic gesture") {
  const auto bb = backbone();
  const auto head = toy::planted_classifier(*bb);
  for (const auto* g : {"Point", "Loupe", "Pinch", "Other", "None"}) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      auto [f, r] = toy::scene(*bb, g, s);
      CHECK(classify(head, bb->forward(f).features).label == LabelRegistry::standard().parse(g));
    }
  }
}

TEST_CASE("k Point frames validate and carry fingertip boxes") {
  const auto bb = backbone();
  Session session(bb, full_config(*bb));
  std::vector<SampleRecord> recs;
  const auto fs = frames(*bb, {"None", "Point", "Point", "Point"}, &recs);
  std::vector<FramePrediction> preds;
  for (const auto& f : fs) preds.push_back(session.process_frame(f));
  CHECK(!preds[0].validated.has_value());
  CHECK(std::holds_alternative<NoResponse>(preds[0].payload));
  CHECK(std::holds_alternative<NoResponse>(preds[1].payload));
  CHECK(preds[1].raw_label == labels::Point);
  REQUIRE(std::holds_alternative<FingertipBoxes>(preds[2].payload));
  CHECK(preds[2].validated == labels::Point);
  for (std::size_t t : {2u, 3u}) {
    const auto& boxes = std::get<FingertipBoxes>(preds[t].payload);
    REQUIRE(boxes.boxes.size() == 1);
    CHECK(iou(boxes.boxes[0], recs[t].fingertip_boxes[0]) >= 0.5);
    CHECK(boxes.confidences.size() == 1);
  }
  CHECK(preds[3].frame_index == 3);
}

TEST_CASE("negative frames give no response and no head call") {
  const auto bb = backbone();
  Session session(bb, full_config(*bb));
  for (const auto& f : frames(*bb, {"None", "None", "Other", "Other", "None"})) {
    const auto p = session.process_frame(f);
    CHECK(std::holds_alternative<NoResponse>(p.payload));
    CHECK(p.head_calls == 0);
    CHECK(p.backbone_calls == 1);
  }
  CHECK(session.counters().heads() == 0);
}

TEST_CASE("one backbone pass and at most one head per frame") {
  const auto bb = backbone();
  Session session(bb, full_config(*bb));
  std::mt19937_64 rng(1);
  const std::vector<std::string> kinds{"Point", "Loupe", "Pinch", "Other", "None"};
  std::vector<std::string> script;
  for (int i = 0; i < 60; ++i) {
    const auto& g = kinds[rng() % kinds.size()];
    const auto run = 1 + rng() % 4;
    for (std::size_t r = 0; r < run; ++r) script.push_back(g);
  }
  std::size_t heads = 0;
  for (const auto& f : frames(*bb, script)) {
    const auto p = session.process_frame(f);
    CHECK(p.backbone_calls == 1);
    CHECK(p.head_calls <= 1);
    const bool negative = !p.validated || *p.validated == kNegativeLabel;
    if (negative) CHECK(p.head_calls == 0);
    if (negative) CHECK(std::holds_alternative<NoResponse>(p.payload));
    if (!negative) CHECK(!std::holds_alternative<NoResponse>(p.payload));
    heads += p.head_calls;
  }
  const auto& c = session.counters();
  CHECK(c.frames == script.size());
  CHECK(c.backbone == script.size());
  CHECK(c.classify == script.size());
  CHECK(c.heads() == heads);
  CHECK(c.pinch > 0);
  CHECK(c.caption > 0);
  CHECK(c.localization > 0);
}

TEST_CASE("payload kind follows the validated label") {
  const auto bb = backbone();
  Session session(bb, full_config(*bb));
  const auto fs = frames(*bb, {"Loupe", "Loupe", "Loupe", "Loupe", "Pinch", "Pinch", "Pinch"});
  std::vector<FramePrediction> p;
  for (const auto& f : fs) p.push_back(session.process_frame(f));
  REQUIRE(std::holds_alternative<CaptionText>(p[1].payload));
  CHECK(std::get<CaptionText>(p[1].payload).text == "Mug mug");
  // Captioned once per validation, then reused.
  CHECK(p[1].head_calls == 1);
  CHECK(p[2].head_calls == 0);
  CHECK(std::get<CaptionText>(p[3].payload).text == "Mug mug");
  CHECK(std::holds_alternative<CaptionText>(p[4].payload));  // Pinch not yet validated
  REQUIRE(std::holds_alternative<Zoom>(p[5].payload));
  CHECK(std::get<Zoom>(p[5].payload).action == ZoomAction::NoZoom);
  CHECK(session.counters().caption == 1);
  CHECK(session.counters().pinch == 2);
}

TEST_CASE("caption_every_n re-captions during a held Loupe") {
  const auto bb = backbone();
  auto cfg = full_config(*bb);
  cfg.caption_every_n = 2;
  Session session(bb, cfg);
  for (const auto& f : frames(*bb, std::vector<std::string>(7, "Loupe"))) session.process_frame(f);
  // Validated on frame 1; captions at held frames 0, 2, 4 of the gesture.
  CHECK(session.counters().caption == 3);
}

TEST_CASE("missing head weights are reported") {
  const auto bb = backbone();
  auto cfg = full_config(*bb);
  cfg.caption.reset();
  Session session(bb, cfg);
  const auto fs = frames(*bb, {"Loupe", "Loupe"});
  session.process_frame(fs[0]);
  CHECK_THROWS_AS(session.process_frame(fs[1]), DataError);

  auto no_fset = full_config(*bb);
  no_fset.filter_sets.clear();
  Session s2(bb, no_fset);
  const auto ps = frames(*bb, {"Point", "Point"});
  s2.process_frame(ps[0]);
  CHECK_THROWS_AS(s2.process_frame(ps[1]), DataError);
}

TEST_CASE("replay is deterministic and reset restores the initial state") {
  const auto bb = backbone();
  const auto fs = frames(*bb, {"None", "Point", "Point", "Loupe", "Loupe", "Pinch", "Pinch", "Pinch", "Other", "Other"});
  Session a(bb, full_config(*bb));
  Session b(bb, full_config(*bb));
  const auto ra = process_stream(a, source_of(fs));
  const auto rb = process_stream(b, source_of(fs));
  CHECK(ra.predictions == rb.predictions);
  a.reset();
  const auto again = process_stream(a, source_of(fs));
  CHECK(again.predictions == ra.predictions);
  const auto reg = LabelRegistry::standard();
  for (std::size_t i = 0; i < fs.size(); ++i) CHECK(to_json(ra.predictions[i], reg) == to_json(rb.predictions[i], reg));
}

TEST_CASE("stream edge cases and timing accounting") {
  const auto bb = backbone();
  Session s(bb, full_config(*bb));
  const std::vector<Tensor> none;
  const auto empty = process_stream(s, source_of(none));
  CHECK(empty.predictions.empty());
  CHECK(empty.timing.frames == 0);

  const auto fs = frames(*bb, {"Point", "Point", "Point", "Pinch"});
  const auto r = process_stream(s, source_of(fs));
  CHECK(r.predictions.size() == 4);
  CHECK(r.timing.frames == 4);
  CHECK(r.timing.backbone + r.timing.classify + r.timing.head <= r.timing.total + 1e-9);
  CHECK(r.timing.backbone > 0.0);
  CHECK(r.timing.to_json().find("\"frames\":4") != std::string::npos);

  Tensor wrong({10, 10, 3});
  CHECK_THROWS_AS(s.process_frame(wrong), ParameterError);
}

TEST_CASE("json lines carry labels and payload") {
  const auto reg = LabelRegistry::standard();
  FramePrediction p;
  p.frame_index = 7;
  p.raw_label = labels::Point;
  p.validated = labels::Point;
  p.payload = FingertipBoxes{{BBox::make(1, 2, 3, 4)}, {0.5}};
  const auto j = to_json(p, reg);
  CHECK(j.find("\"frame_index\":7") != std::string::npos);
  CHECK(j.find("\"raw\":\"Point\"") != std::string::npos);
  CHECK(j.find("\"validated\":\"Point\"") != std::string::npos);
  CHECK(j.find("[1,2,3,4]") != std::string::npos);
  p.validated.reset();
  p.payload = NoResponse{};
  CHECK(to_json(p, reg).find("\"validated\":null") != std::string::npos);
  p.validated = kNegativeLabel;
  CHECK(to_json(p, reg).find("\"validated\":\"Negative\"") != std::string::npos);
}
