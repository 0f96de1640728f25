#include "gesture/classifier.hpp"

#include <sstream>

#include "gesture/error.hpp"

namespace gesture {

DenseSoftmaxHead DenseSoftmaxHead::zeros(std::size_t labels, std::size_t feature_dim) {
  return DenseSoftmaxHead{Tensor({labels, feature_dim}), Tensor({labels})};
}

RoutingDecision classify(const DenseSoftmaxHead& head, const FeatureVector& features) {
  if (features.size() != head.feature_dim()) {
    std::ostringstream msg;
    msg << "classifier expects " << head.feature_dim() << " features, got " << features.size();
    throw ParameterError(msg.str());
  }
  const auto x = nn::to_vec(features.values.data());
  RoutingDecision d;
  d.probabilities = nn::softmax(nn::dense(head.weights, head.biases, x));
  d.label = static_cast<LabelId>(nn::argmax(d.probabilities));
  d.one_hot.assign(d.probabilities.size(), 0);
  d.one_hot[static_cast<std::size_t>(d.label)] = 1;
  return d;
}

HeadSelector route(LabelId label, const LabelRegistry& registry) {
  const auto& entry = registry.entry(label);
  HeadSelector sel{entry.head, label, false};
  if (entry.negative) sel.head = HeadKind::None;
  sel.fingertips_only = label == labels::Drag;
  return sel;
}

HeadSelector route(const RoutingDecision& decision, const LabelRegistry& registry) {
  return route(decision.label, registry);
}

WeightBundle to_bundle(const DenseSoftmaxHead& head) {
  WeightBundle b;
  b.kind = "classify";
  b.tensors.emplace("W", head.weights);
  b.tensors.emplace("b", head.biases);
  return b;
}

DenseSoftmaxHead classifier_from_bundle(const WeightBundle& bundle) {
  if (bundle.kind != "classify") throw DataError("expected a classify weight bundle, got '" + bundle.kind + "'");
  DenseSoftmaxHead h{bundle.tensor("W"), bundle.tensor("b")};
  if (h.weights.ndim() != 2 || h.biases.ndim() != 1 || h.biases.size() != h.weights.dim(0)) {
    throw DataError("classifier weights have inconsistent shapes");
  }
  return h;
}

double ClassifierModel::accumulate(std::span<const Sample> batch, nn::Gradients& grads) {
  if (batch.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& s : batch) {
    const auto p = nn::softmax(nn::dense(head_.weights, head_.biases, s.features));
    total += nn::cross_entropy(p, s.label);
    nn::Vec dlogits = p;
    dlogits[s.label] -= 1.0;
    for (auto& g : dlogits) g *= scale;
    nn::dense_backward(head_.weights, s.features, dlogits, grads[0], grads[1], {});
  }
  return total * scale;
}

double ClassifierModel::loss(std::span<const Sample> batch) const {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : batch) {
    total += nn::cross_entropy(nn::softmax(nn::dense(head_.weights, head_.biases, s.features)), s.label);
  }
  return total / static_cast<double>(batch.size());
}

std::size_t ClassifierModel::predict(const Sample& s) const {
  return nn::argmax(nn::softmax(nn::dense(head_.weights, head_.biases, s.features)));
}

}  // namespace gesture
