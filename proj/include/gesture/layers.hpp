#pragma once

#include <span>
#include <vector>

#include "gesture/tensor.hpp"

// Building blocks shared by the trainable heads. Parameters are stored as f32
// tensors; activations and gradients are carried in double.
namespace gesture::nn {

using Vec = std::vector<double>;
using Gradients = std::vector<std::vector<double>>;

// y = W x + b, W: (out, in).
Vec dense(const Tensor& W, const Tensor& b, std::span<const double> x);

// Accumulates dW += dy x^T, db += dy; writes dx = W^T dy when dx is non-empty.
void dense_backward(const Tensor& W, std::span<const double> x, std::span<const double> dy, std::span<double> dW,
                    std::span<double> db, std::span<double> dx);

void relu_inplace(Vec& v);
// Zeroes grad entries whose forward output was not positive.
void relu_backward(std::span<const double> out, std::span<double> grad);

// Max-subtracted softmax.
Vec softmax(std::span<const double> logits);

// Index of the maximum; ties go to the lowest index.
std::size_t argmax(std::span<const double> v);

inline constexpr double kProbabilityFloor = 1e-12;

// -log(max(probs[target], 1e-12)). Throws ParameterError on a bad target.
double cross_entropy(std::span<const double> probs, std::size_t target);

double sigmoid(double x);

Vec to_vec(std::span<const float> values);

Gradients zero_gradients(const std::vector<Tensor*>& params);
Gradients zero_gradients(const std::vector<const Tensor*>& params);

// Uniform(-limit, limit) initialisation of every element.
template <class Rng>
void uniform_fill(Tensor& t, double limit, Rng& rng);

}  // namespace gesture::nn

#include <random>

namespace gesture::nn {

template <class Rng>
void uniform_fill(Tensor& t, double limit, Rng& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : t.data()) v = static_cast<float>(dist(rng));
}

}  // namespace gesture::nn
