#include "gesture/layers.hpp"

#include <algorithm>
#include <cmath>

#include "gesture/error.hpp"

namespace gesture::nn {

Vec dense(const Tensor& W, const Tensor& b, std::span<const double> x) {
  const std::size_t out = W.dim(0);
  const std::size_t in = W.dim(1);
  if (x.size() != in || b.size() != out) throw ParameterError("dense: dimension mismatch");
  Vec y(out);
  const float* w = W.data().data();
  for (std::size_t o = 0; o < out; ++o) {
    double acc = b[o];
    const float* row = w + o * in;
    for (std::size_t i = 0; i < in; ++i) acc += static_cast<double>(row[i]) * x[i];
    y[o] = acc;
  }
  return y;
}

void dense_backward(const Tensor& W, std::span<const double> x, std::span<const double> dy, std::span<double> dW,
                    std::span<double> db, std::span<double> dx) {
  const std::size_t out = W.dim(0);
  const std::size_t in = W.dim(1);
  const float* w = W.data().data();
  for (std::size_t o = 0; o < out; ++o) {
    const double g = dy[o];
    db[o] += g;
    if (g == 0.0) continue;
    double* drow = dW.data() + o * in;
    for (std::size_t i = 0; i < in; ++i) drow[i] += g * x[i];
  }
  if (!dx.empty()) {
    std::fill(dx.begin(), dx.end(), 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dy[o];
      if (g == 0.0) continue;
      const float* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) dx[i] += g * row[i];
    }
  }
}

void relu_inplace(Vec& v) {
  for (auto& x : v) x = x > 0.0 ? x : 0.0;
}

void relu_backward(std::span<const double> out, std::span<double> grad) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] > 0.0)) grad[i] = 0.0;
  }
}

Vec softmax(std::span<const double> logits) {
  Vec p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double m = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (auto& v : p) {
    v = std::exp(v - m);
    sum += v;
  }
  for (auto& v : p) v /= sum;
  return p;
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

double cross_entropy(std::span<const double> probs, std::size_t target) {
  if (target >= probs.size()) throw ParameterError("cross_entropy: invalid target index");
  return -std::log(std::max(probs[target], kProbabilityFloor));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vec to_vec(std::span<const float> values) { return Vec(values.begin(), values.end()); }

Gradients zero_gradients(const std::vector<Tensor*>& params) {
  Gradients g;
  g.reserve(params.size());
  for (const auto* p : params) g.emplace_back(p->size(), 0.0);
  return g;
}

Gradients zero_gradients(const std::vector<const Tensor*>& params) {
  Gradients g;
  g.reserve(params.size());
  for (const auto* p : params) g.emplace_back(p->size(), 0.0);
  return g;
}

}  // namespace gesture::nn
