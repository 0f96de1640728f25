#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gesture/backbone.hpp"
#include "gesture/caption.hpp"
#include "gesture/classifier.hpp"
#include "gesture/filter_selection.hpp"
#include "gesture/labels.hpp"
#include "gesture/pinch.hpp"
#include "gesture/temporal.hpp"

namespace gesture {

struct SessionConfig {
  LabelRegistry registry = LabelRegistry::standard();
  DenseSoftmaxHead classifier;
  std::map<LabelId, FilterSet> filter_sets;  // per localisation-bound label
  std::optional<PinchHeadWeights> pinch;
  std::optional<CaptionWeights> caption;
  std::optional<Vocabulary> vocabulary;
  int k = 2;
  std::size_t d = 5;
  std::size_t max_caption_len = 20;
  // 0 captions once per Loupe validation; n > 0 also re-captions every n frames.
  std::size_t caption_every_n = 0;
  bool postprocess_captions = true;
};

struct NoResponse {
  bool operator==(const NoResponse&) const = default;
};
struct FingertipBoxes {
  std::vector<BBox> boxes;
  std::vector<double> confidences;
  bool operator==(const FingertipBoxes&) const = default;
};
struct CaptionText {
  std::string text;
  bool operator==(const CaptionText&) const = default;
};
struct Zoom {
  ZoomAction action = ZoomAction::NoZoom;
  std::array<double, kZoomClasses> probabilities{};
  bool operator==(const Zoom&) const = default;
};

using Payload = std::variant<NoResponse, FingertipBoxes, CaptionText, Zoom>;

struct FramePrediction {
  std::size_t frame_index = 0;
  LabelId raw_label = 0;
  std::optional<LabelId> validated;  // collapsed; kNegativeLabel for the negative class
  Payload payload;
  std::size_t backbone_calls = 0;  // during this frame
  std::size_t head_calls = 0;

  bool operator==(const FramePrediction&) const = default;
};

std::string to_json(const FramePrediction& p, const LabelRegistry& registry);

struct Counters {
  std::size_t frames = 0;
  std::size_t backbone = 0;
  std::size_t classify = 0;
  std::size_t localization = 0;
  std::size_t caption = 0;
  std::size_t pinch = 0;

  std::size_t heads() const { return localization + caption + pinch; }
};

struct StageTiming {
  double backbone = 0.0;  // seconds
  double classify = 0.0;
  double head = 0.0;
  double total = 0.0;
  std::size_t frames = 0;

  std::string to_json() const;
};

class Session {
 public:
  Session(std::shared_ptr<const Backbone> backbone, SessionConfig config);

  FramePrediction process_frame(const Tensor& frame);
  void reset();

  const Counters& counters() const { return counters_; }
  const StageTiming& timing() const { return timing_; }
  const SessionConfig& config() const { return config_; }
  const std::vector<std::string>& requested_layers() const { return layers_; }

 private:
  std::shared_ptr<const Backbone> backbone_;
  SessionConfig config_;
  std::vector<std::string> layers_;
  std::string pinch_layer_;
  TemporalGate gate_;
  FrameBuffer buffer_;
  Counters counters_;
  StageTiming timing_;
  std::size_t next_index_ = 0;
  std::optional<std::string> cached_caption_;
  std::size_t loupe_frames_ = 0;
};

// Pulls frames until the source returns nullopt.
using FrameSource = std::function<std::optional<Tensor>()>;

struct StreamResult {
  std::vector<FramePrediction> predictions;
  StageTiming timing;
};

StreamResult process_stream(Session& session, const FrameSource& source);

}  // namespace gesture
