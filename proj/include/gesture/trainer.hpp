#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <utility>
#include <string>
#include <vector>

#include "gesture/error.hpp"
#include "gesture/layers.hpp"

namespace gesture {

using nn::cross_entropy;

struct TrainConfig {
  std::size_t max_epochs = 200;
  std::size_t batch_size = 32;
  std::size_t patience = 10;
  double rho = 0.95;
  double epsilon = 1e-6;
  double learning_rate = 1.0;  // scale on the adaptive step
  // Consumed where samples are built (image-level transforms before feature
  // extraction); the trainer itself only sees features.
  bool augment = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t stopped_epoch = 0;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;

  std::string csv() const;
  bool operator==(const TrainReport&) const;
};

// Adaptive per-parameter steps from decayed averages of squared gradients and
// squared updates.
class Adadelta {
 public:
  Adadelta(const std::vector<const Tensor*>& params, double rho, double epsilon, double learning_rate = 1.0);
  void step(const std::vector<Tensor*>& params, const nn::Gradients& grads);

 private:
  double rho_;
  double eps_;
  double lr_;
  nn::Gradients sq_grad_;
  nn::Gradients sq_update_;
};

template <class M>
concept TrainableModel = requires(M m, const M cm, std::span<const typename M::Sample> batch, nn::Gradients& g,
                                  const typename M::Sample& s) {
  { m.parameters() } -> std::same_as<std::vector<Tensor*>>;
  { cm.parameters() } -> std::same_as<std::vector<const Tensor*>>;
  { m.accumulate(batch, g) } -> std::convertible_to<double>;
  { cm.loss(batch) } -> std::convertible_to<double>;
  { cm.correct(s) } -> std::convertible_to<bool>;
};

template <TrainableModel M>
double accuracy(const M& model, std::span<const typename M::Sample> samples) {
  if (samples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : samples) hits += model.correct(s) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

// Mini-batch training with early stopping on validation loss. On return the
// model holds the weights of the best epoch.
template <TrainableModel M>
TrainReport train(M& model, std::span<const typename M::Sample> train_set,
                  std::span<const typename M::Sample> val_set, const TrainConfig& config) {
  config.validate();
  if (train_set.empty()) throw DataError("empty training set");
  if (val_set.empty()) {
    warn("no validation samples; early stopping uses the training loss");
    val_set = train_set;
  }
  if constexpr (requires(const typename M::Sample& s) { s.label; }) {
    std::set<std::size_t> seen;
    for (const auto& s : train_set) seen.insert(static_cast<std::size_t>(s.label));
    if (seen.size() < 2) warn("training set has a single class");
  }

  std::mt19937_64 rng(config.seed);
  Adadelta opt(std::as_const(model).parameters(), config.rho, config.epsilon, config.learning_rate);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<typename M::Sample> batch;

  TrainReport report;
  std::optional<M> best;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(train_set[order[i]]);
      auto grads = nn::zero_gradients(std::as_const(model).parameters());
      model.accumulate(std::span<const typename M::Sample>(batch), grads);
      opt.step(model.parameters(), grads);
    }
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = model.loss(train_set);
    st.val_loss = model.loss(val_set);
    st.train_accuracy = accuracy(model, train_set);
    st.val_accuracy = accuracy(model, val_set);
    report.epochs.push_back(st);
    report.stopped_epoch = epoch;
    if (!best || st.val_loss < report.best_val_loss) {
      report.best_val_loss = st.val_loss;
      report.best_epoch = epoch;
      best = model;
    } else if (epoch - report.best_epoch >= config.patience) {
      break;
    }
  }
  model = std::move(*best);
  return report;
}

struct TwoPhaseReport {
  std::optional<TrainReport> synthetic;
  TrainReport real;
};

// Trains on the synthetic set, then fine-tunes the result on the real set with
// the same configuration. skip_synthetic reduces to plain train() on the real set.
template <TrainableModel M>
TwoPhaseReport two_phase(M& model, std::span<const typename M::Sample> synthetic_train,
                         std::span<const typename M::Sample> synthetic_val,
                         std::span<const typename M::Sample> real_train, std::span<const typename M::Sample> real_val,
                         const TrainConfig& config, bool skip_synthetic = false) {
  TwoPhaseReport out;
  if (!skip_synthetic) {
    if (synthetic_train.empty()) throw DataError("empty synthetic training set");
    out.synthetic = train(model, synthetic_train, synthetic_val, config);
  }
  if (real_train.empty()) throw DataError("empty real training set");
  out.real = train(model, real_train, real_val, config);
  return out;
}

struct GradCheck {
  std::size_t coordinates = 0;
  double max_relative_error = 0.0;
  double max_abs_gradient = 0.0;
};

// Central differences on random parameter coordinates. The denominator is the
// actual difference of the perturbed f32 values.
template <TrainableModel M, class LossFn>
GradCheck gradient_check(M& model, std::span<const typename M::Sample> batch, LossFn&& loss_fn,
                         std::size_t coordinates, double step, std::uint64_t seed) {
  auto params = model.parameters();
  M probe = model;
  auto grads = nn::zero_gradients(std::as_const(probe).parameters());
  probe.accumulate(batch, grads);

  std::size_t total = 0;
  for (auto* p : params) total += p->size();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  GradCheck out;
  for (std::size_t n = 0; n < coordinates; ++n) {
    std::size_t flat = pick(rng);
    std::size_t which = 0;
    while (flat >= params[which]->size()) flat -= params[which++]->size();
    float& w = (*params[which])[flat];
    const float orig = w;
    const float hi = static_cast<float>(orig + step);
    const float lo = static_cast<float>(orig - step);
    w = hi;
    const double l_hi = loss_fn(model, batch);
    w = lo;
    const double l_lo = loss_fn(model, batch);
    w = orig;
    const double numeric = (l_hi - l_lo) / (static_cast<double>(hi) - static_cast<double>(lo));
    const double analytic = grads[which][flat];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    out.max_relative_error = std::max(out.max_relative_error, std::abs(analytic - numeric) / denom);
    out.max_abs_gradient = std::max(out.max_abs_gradient, std::abs(analytic));
    ++out.coordinates;
  }
  return out;
}

}  // namespace gesture
