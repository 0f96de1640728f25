#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gesture/atn.hpp"
#include "gesture/backbone.hpp"
#include "gesture/labels.hpp"
#include "gesture/layers.hpp"

namespace gesture {

// Dense layer with L outputs over the pooled features, followed by softmax.
struct DenseSoftmaxHead {
  Tensor weights;  // (L, feature_dim)
  Tensor biases;   // (L)

  static DenseSoftmaxHead zeros(std::size_t labels, std::size_t feature_dim);
  template <class Rng>
  static DenseSoftmaxHead random(std::size_t labels, std::size_t feature_dim, double limit, Rng& rng) {
    auto h = zeros(labels, feature_dim);
    nn::uniform_fill(h.weights, limit, rng);
    nn::uniform_fill(h.biases, limit, rng);
    return h;
  }

  std::size_t labels() const { return weights.dim(0); }
  std::size_t feature_dim() const { return weights.dim(1); }
};

struct RoutingDecision {
  std::vector<double> probabilities;
  std::vector<int> one_hot;
  LabelId label = 0;
};

RoutingDecision classify(const DenseSoftmaxHead& head, const FeatureVector& features);

struct HeadSelector {
  HeadKind head = HeadKind::None;
  LabelId label = 0;
  // Drag only needs the fingertip positions, never an object description.
  bool fingertips_only = false;

  bool active() const { return head != HeadKind::None; }
};

HeadSelector route(const RoutingDecision& decision, const LabelRegistry& registry);
HeadSelector route(LabelId label, const LabelRegistry& registry);

WeightBundle to_bundle(const DenseSoftmaxHead& head);
DenseSoftmaxHead classifier_from_bundle(const WeightBundle& bundle);

// Trainable adapter: mean cross-entropy over (features, label) samples.
struct ClassifierSample {
  std::vector<double> features;
  std::size_t label = 0;
};

class ClassifierModel {
 public:
  using Sample = ClassifierSample;

  explicit ClassifierModel(DenseSoftmaxHead head) : head_(std::move(head)) {}

  std::vector<Tensor*> parameters() { return {&head_.weights, &head_.biases}; }
  std::vector<const Tensor*> parameters() const { return {&head_.weights, &head_.biases}; }

  // Mean loss over the batch; grads receive d(mean loss)/d(param).
  double accumulate(std::span<const Sample> batch, nn::Gradients& grads);
  double loss(std::span<const Sample> batch) const;
  std::size_t predict(const Sample& s) const;
  bool correct(const Sample& s) const { return predict(s) == s.label; }

  const DenseSoftmaxHead& head() const { return head_; }

 private:
  DenseSoftmaxHead head_;
};

}  // namespace gesture
