#pragma once

#include <array>
#include <deque>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "gesture/atn.hpp"
#include "gesture/backbone.hpp"
#include "gesture/layers.hpp"

namespace gesture {

enum class ZoomAction { ZoomIn = 0, ZoomOut = 1, NoZoom = 2 };

inline constexpr std::size_t kZoomClasses = 3;

std::string_view to_string(ZoomAction a);
ZoomAction parse_zoom_action(std::string_view s);

// Holds the d stacks preceding the current frame.
class FrameBuffer {
 public:
  explicit FrameBuffer(std::size_t d = 5);

  // Pushes the current stack and returns (current, past) where past is the
  // stack d frames back, or the oldest held one while warming up.
  std::pair<ActivationStack, ActivationStack> push(const ActivationStack& current);

  std::size_t capacity() const { return d_; }
  std::size_t size() const { return held_.size(); }
  void clear() { held_.clear(); }

 private:
  std::size_t d_;
  std::deque<ActivationStack> held_;
};

struct PinchConfig {
  std::size_t channels = 0;  // filters of one input stack
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t conv_filters = 64;
  std::size_t fc_units = 32;
  double bn_epsilon = 1e-3;
  double bn_momentum = 0.9;
};

// concat -> conv3x3 (no bias) -> batch norm -> maxpool 2x2 -> fc + ReLU -> fc 3 -> softmax.
struct PinchHeadWeights {
  PinchConfig config;
  Tensor conv;      // (C, 2*channels, 3, 3)
  Tensor bn_gamma;  // (C)
  Tensor bn_beta;   // (C)
  Tensor bn_mean;   // (C) running statistics
  Tensor bn_var;    // (C)
  Tensor fc1_w;     // (fc_units, C * floor(h/2) * floor(w/2))
  Tensor fc1_b;
  Tensor fc2_w;     // (3, fc_units)
  Tensor fc2_b;

  static PinchHeadWeights zeros(const PinchConfig& config);
  template <class Rng>
  static PinchHeadWeights random(const PinchConfig& config, double limit, Rng& rng) {
    auto w = zeros(config);
    for (Tensor* t : {&w.conv, &w.fc1_w, &w.fc1_b, &w.fc2_w, &w.fc2_b}) nn::uniform_fill(*t, limit, rng);
    return w;
  }

  std::size_t pooled_height() const { return config.height / 2; }
  std::size_t pooled_width() const { return config.width / 2; }
  std::size_t flat_size() const { return config.conv_filters * pooled_height() * pooled_width(); }
};

struct PinchPrediction {
  std::array<double, kZoomClasses> probabilities{};
  ZoomAction action = ZoomAction::NoZoom;
};

// Argmax over the three classes; any tie involving NoZoom resolves to NoZoom.
ZoomAction zoom_argmax(std::span<const double> probs);

PinchPrediction pinch_forward(const PinchHeadWeights& weights, const ActivationStack& current,
                              const ActivationStack& past);

// Fingertip-distance baseline over a history of (thumb, index) positions, oldest first.
struct Fingertips {
  double thumb_x = 0.0, thumb_y = 0.0;
  double index_x = 0.0, index_y = 0.0;
  double distance() const;
};

ZoomAction baseline_from_distances(double past, double current, double threshold = 3.0);
// Compares the newest entry with the one d frames earlier; too short a history gives NoZoom.
ZoomAction pinch_baseline(std::span<const Fingertips> history, std::size_t d = 5, double threshold = 3.0);

WeightBundle to_bundle(const PinchHeadWeights& weights);
PinchHeadWeights pinch_from_bundle(const WeightBundle& bundle);

struct PinchSample {
  Tensor current;  // (channels, h, w)
  Tensor past;
  std::size_t label = 0;  // ZoomAction index
};

// Trainable adapter. accumulate() normalises with batch statistics and updates
// the running statistics; loss() and predict() use the running statistics.
class PinchModel {
 public:
  using Sample = PinchSample;

  explicit PinchModel(PinchHeadWeights weights) : w_(std::move(weights)) {}

  std::vector<Tensor*> parameters() { return {&w_.conv, &w_.bn_gamma, &w_.bn_beta, &w_.fc1_w, &w_.fc1_b, &w_.fc2_w, &w_.fc2_b}; }
  std::vector<const Tensor*> parameters() const {
    return {&w_.conv, &w_.bn_gamma, &w_.bn_beta, &w_.fc1_w, &w_.fc1_b, &w_.fc2_w, &w_.fc2_b};
  }

  double accumulate(std::span<const Sample> batch, nn::Gradients& grads);
  double loss(std::span<const Sample> batch) const;
  // Training-mode loss (batch statistics) without touching the running statistics.
  double batch_loss(std::span<const Sample> batch) const;
  std::size_t predict(const Sample& s) const;
  bool correct(const Sample& s) const { return predict(s) == s.label; }

  const PinchHeadWeights& weights() const { return w_; }

 private:
  double run_batch(std::span<const Sample> batch, nn::Gradients* grads, std::vector<double>* mean,
                   std::vector<double>* var) const;

  PinchHeadWeights w_;
};

}  // namespace gesture
