#include "gesture/engine.hpp"

#include <algorithm>
#include <chrono>

#include "json.hpp"

#include "gesture/error.hpp"

namespace gesture {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::string to_json(const FramePrediction& p, const LabelRegistry& registry) {
  nlohmann::ordered_json j;
  j["frame_index"] = p.frame_index;
  j["raw"] = registry.name(p.raw_label);
  j["validated"] = p.validated ? nlohmann::ordered_json(registry.display_name(*p.validated)) : nullptr;
  nlohmann::ordered_json payload;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NoResponse>) {
          payload["kind"] = "none";
        } else if constexpr (std::is_same_v<T, FingertipBoxes>) {
          payload["kind"] = "fingertips";
          payload["boxes"] = nlohmann::ordered_json::array();
          for (const auto& b : v.boxes) payload["boxes"].push_back({b.x0, b.y0, b.x1, b.y1});
          payload["confidences"] = v.confidences;
        } else if constexpr (std::is_same_v<T, CaptionText>) {
          payload["kind"] = "caption";
          payload["text"] = v.text;
        } else {
          payload["kind"] = "zoom";
          payload["action"] = std::string(to_string(v.action));
          payload["probabilities"] = v.probabilities;
        }
      },
      p.payload);
  j["payload"] = payload;
  return j.dump();
}

std::string StageTiming::to_json() const {
  nlohmann::ordered_json j;
  j["frames"] = frames;
  j["backbone_s"] = backbone;
  j["classify_s"] = classify;
  j["head_s"] = head;
  j["total_s"] = total;
  return j.dump();
}

Session::Session(std::shared_ptr<const Backbone> backbone, SessionConfig config)
    : backbone_(std::move(backbone)), config_(std::move(config)), gate_(config_.k), buffer_(config_.d) {
  if (!backbone_) throw ParameterError("session needs a backbone");
  if (config_.classifier.labels() != config_.registry.size()) {
    throw ParameterError("classifier has " + std::to_string(config_.classifier.labels()) + " outputs for " +
                         std::to_string(config_.registry.size()) + " labels");
  }
  const auto names = backbone_->layer_names();
  auto require_layer = [&](const std::string& l) {
    if (std::find(names.begin(), names.end(), l) == names.end()) throw ParameterError("unknown layer '" + l + "'");
    if (std::find(layers_.begin(), layers_.end(), l) == layers_.end()) layers_.push_back(l);
  };
  for (const auto& [label, fset] : config_.filter_sets) require_layer(fset.layer);
  pinch_layer_ = backbone_->pooled_layer();
  if (config_.pinch) require_layer(pinch_layer_);
  if (config_.caption && (!config_.vocabulary || config_.vocabulary->size() != config_.caption->config.vocab_size)) {
    throw ParameterError("caption head needs a matching vocabulary");
  }
}

void Session::reset() {
  gate_.reset();
  buffer_.clear();
  counters_ = {};
  timing_ = {};
  next_index_ = 0;
  cached_caption_.reset();
  loupe_frames_ = 0;
}

FramePrediction Session::process_frame(const Tensor& frame) {
  const auto start = Clock::now();
  FramePrediction pred;
  pred.frame_index = next_index_++;

  auto t = Clock::now();
  const BackboneOutput out = backbone_->forward(frame, layers_);
  ++counters_.backbone;
  pred.backbone_calls = 1;
  timing_.backbone += seconds_since(t);

  t = Clock::now();
  const auto decision = classify(config_.classifier, out.features);
  ++counters_.classify;
  pred.raw_label = decision.label;
  const auto step = gate_.step(config_.registry.collapse(decision.label));
  pred.validated = step.validated;
  timing_.classify += seconds_since(t);

  // The buffer is fed every frame so history exists when Pinch validates.
  std::optional<std::pair<ActivationStack, ActivationStack>> pinch_pair;
  if (config_.pinch) pinch_pair = buffer_.push(out.stack(pinch_layer_));

  t = Clock::now();
  const bool loupe = step.validated && *step.validated == labels::Loupe;
  if (!loupe) {
    loupe_frames_ = 0;
    cached_caption_.reset();
  }
  if (step.validated && *step.validated != kNegativeLabel) {
    const LabelId label = *step.validated;
    const auto selector = route(label, config_.registry);
    switch (selector.head) {
      case HeadKind::Localization: {
        auto it = config_.filter_sets.find(label);
        if (it == config_.filter_sets.end()) {
          throw DataError("no filter set for " + config_.registry.name(label));
        }
        const auto& fset = it->second;
        auto loc = localize(out.stack(fset.layer), fset, fset.beta, fset.kernel, fset.min_area);
        ++counters_.localization;
        ++pred.head_calls;
        pred.payload = FingertipBoxes{std::move(loc.boxes), std::move(loc.confidences)};
        break;
      }
      case HeadKind::Caption: {
        if (!config_.caption) throw DataError("no caption weights for " + config_.registry.name(label));
        const bool rerun = !cached_caption_ ||
                           (config_.caption_every_n > 0 && loupe_frames_ % config_.caption_every_n == 0);
        if (rerun) {
          auto cap = decode(*config_.caption, *config_.vocabulary, out.features, config_.max_caption_len);
          cached_caption_ = config_.postprocess_captions ? postprocess(cap.text) : cap.text;
          ++counters_.caption;
          ++pred.head_calls;
        }
        ++loupe_frames_;
        pred.payload = CaptionText{*cached_caption_};
        break;
      }
      case HeadKind::Pinch: {
        if (!config_.pinch) throw DataError("no pinch weights for " + config_.registry.name(label));
        const auto p = pinch_forward(*config_.pinch, pinch_pair->first, pinch_pair->second);
        ++counters_.pinch;
        ++pred.head_calls;
        pred.payload = Zoom{p.action, p.probabilities};
        break;
      }
      case HeadKind::None: break;
    }
  }
  timing_.head += seconds_since(t);
  ++counters_.frames;
  ++timing_.frames;
  timing_.total += seconds_since(start);
  return pred;
}

StreamResult process_stream(Session& session, const FrameSource& source) {
  StreamResult result;
  const auto before = session.timing();
  for (;;) {
    std::optional<Tensor> frame;
    try {
      frame = source();
    } catch (const std::exception& e) {
      throw DataError("frame " + std::to_string(session.counters().frames) + ": " + e.what());
    }
    if (!frame) break;
    result.predictions.push_back(session.process_frame(*frame));
  }
  const auto& after = session.timing();
  result.timing.backbone = after.backbone - before.backbone;
  result.timing.classify = after.classify - before.classify;
  result.timing.head = after.head - before.head;
  result.timing.total = after.total - before.total;
  result.timing.frames = after.frames - before.frames;
  return result;
}

}  // namespace gesture
