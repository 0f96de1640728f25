#include <cmath>
#include <random>

#include "doctest.h"
#include "gesture/classifier.hpp"
#include "gesture/error.hpp"
#include "gesture/trainer.hpp"
#include "toy_data.hpp"

using namespace gesture;

namespace {

// Loss never moves: early stopping must fire exactly `patience` epochs after epoch 1.
struct FlatModel {
  struct Sample {
    std::size_t label = 0;
  };
  Tensor w{std::vector<std::size_t>{1}, 0.5f};
  std::vector<Tensor*> parameters() { return {&w}; }
  std::vector<const Tensor*> parameters() const { return {&w}; }
  double accumulate(std::span<const Sample>, nn::Gradients&) { return 1.0; }
  double loss(std::span<const Sample>) const { return 1.0; }
  bool correct(const Sample&) const { return false; }
};

ClassifierModel fresh(std::size_t classes, std::size_t dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ClassifierModel(DenseSoftmaxHead::random(classes, dims, 0.05, rng));
}

using CS = std::span<const ClassifierSample>;

}  // namespace

TEST_CASE("cross entropy examples") {
  const std::vector<double> one_hot{0, 0, 1};
  CHECK(cross_entropy(one_hot, 2) == 0.0);
  const std::vector<double> uniform(6, 1.0 / 6.0);
  CHECK(cross_entropy(uniform, 4) == doctest::Approx(std::log(6.0)).epsilon(1e-12));
  const std::vector<double> tiny{1.0 - 1e-20, 1e-20};
  CHECK(cross_entropy(tiny, 1) == doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
  CHECK(cross_entropy(tiny, 1) == doctest::Approx(27.631).epsilon(1e-4));
  CHECK_THROWS_AS(cross_entropy(one_hot, 3), ParameterError);
}

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK(c.max_epochs == 200);
  CHECK(c.batch_size == 32);
  CHECK(c.patience == 10);
  CHECK(c.rho == 0.95);
  CHECK(c.epsilon == 1e-6);
  CHECK_NOTHROW(c.validate());
  c.rho = 1.0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = TrainConfig{};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
}

TEST_CASE("adadelta first step follows the update rule") {
  Tensor p({2}, std::vector<float>{1.0f, -2.0f});
  std::vector<const Tensor*> cp{&p};
  Adadelta opt(cp, 0.95, 1e-6);
  const nn::Gradients g{{0.5, -4.0}};
  opt.step({&p}, g);
  for (std::size_t i = 0; i < 2; ++i) {
    const double eg = 0.05 * g[0][i] * g[0][i];
    const double dx = -std::sqrt(1e-6) / std::sqrt(eg + 1e-6) * g[0][i];
    const double start = i == 0 ? 1.0 : -2.0;
    CHECK(p[i] == doctest::Approx(start + dx).epsilon(1e-6));
  }
  // Second step uses the decayed update average.
  const double eg1 = 0.05 * 0.25, dx1 = -std::sqrt(1e-6) / std::sqrt(eg1 + 1e-6) * 0.5;
  const double ex1 = 0.05 * dx1 * dx1;
  const double eg2 = 0.95 * eg1 + 0.05 * 0.25;
  const double dx2 = -std::sqrt(ex1 + 1e-6) / std::sqrt(eg2 + 1e-6) * 0.5;
  const float before = p[0];
  opt.step({&p}, g);
  CHECK(p[0] - before == doctest::Approx(dx2).epsilon(1e-3));
}

TEST_CASE("separable set reaches full training accuracy") {
  const auto data = toy::separable_set(4, 6, 25, 3);
  auto model = fresh(4, 6, 1);
  TrainConfig cfg;
  const auto report = train(model, CS(data), CS(data), cfg);
  CHECK(accuracy(model, CS(data)) == 1.0);
  CHECK(report.stopped_epoch <= 200);
}

TEST_CASE("constant loss stops at the patience boundary") {
  FlatModel m;
  const std::vector<FlatModel::Sample> data{{0}, {1}};
  TrainConfig cfg;
  const auto r = train(m, std::span<const FlatModel::Sample>(data), std::span<const FlatModel::Sample>(data), cfg);
  CHECK(r.best_epoch == 1);
  CHECK(r.stopped_epoch == 11);
  cfg.patience = 3;
  CHECK(train(m, std::span<const FlatModel::Sample>(data), std::span<const FlatModel::Sample>(data), cfg).stopped_epoch == 4);
}

TEST_CASE("same seed gives the same report and weights") {
  const auto data = toy::separable_set(3, 5, 20, 9);
  const auto val = toy::separable_set(3, 5, 5, 10);
  TrainConfig cfg;
  cfg.max_epochs = 20;
  cfg.batch_size = 8;
  cfg.seed = 42;
  auto a = fresh(3, 5, 1);
  auto b = fresh(3, 5, 1);
  const auto ra = train(a, CS(data), CS(val), cfg);
  const auto rb = train(b, CS(data), CS(val), cfg);
  CHECK(ra == rb);
  CHECK(ra.csv() == rb.csv());
  CHECK(a.head().weights == b.head().weights);
  cfg.seed = 43;
  auto c = fresh(3, 5, 1);
  const auto rc = train(c, CS(data), CS(val), cfg);
  CHECK(!(rc == ra));
}

TEST_CASE("early stopping returns the best epoch's weights") {
  const auto data = toy::separable_set(3, 4, 10, 11);
  auto val = toy::separable_set(3, 4, 10, 12);
  for (auto& s : val) s.label = (s.label + 1) % 3;  // training moves val loss the wrong way
  TrainConfig cfg;
  cfg.max_epochs = 50;
  cfg.patience = 5;
  auto model = fresh(3, 4, 2);
  const auto r = train(model, CS(data), CS(val), cfg);
  for (const auto& e : r.epochs) CHECK(r.best_val_loss <= e.val_loss);
  CHECK(r.epochs[r.best_epoch - 1].val_loss == r.best_val_loss);
  CHECK(model.loss(CS(val)) == doctest::Approx(r.best_val_loss).epsilon(1e-12));
  CHECK(r.stopped_epoch == r.best_epoch + 5);
  CHECK(r.csv().rfind("epoch,train_loss,val_loss,train_accuracy,val_accuracy\n", 0) == 0);
}

TEST_CASE("full-batch loss is non-increasing for a small step scale") {
  const auto data = toy::separable_set(3, 4, 15, 21);
  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.batch_size = data.size();
  cfg.learning_rate = 0.1;
  cfg.patience = 5;
  auto model = fresh(3, 4, 3);
  double prev = model.loss(CS(data));
  const auto r = train(model, CS(data), CS(data), cfg);
  REQUIRE(r.epochs.size() == 5);
  for (const auto& e : r.epochs) {
    CHECK(e.train_loss <= prev);
    prev = e.train_loss;
  }
}

TEST_CASE("empty sets are rejected") {
  auto model = fresh(2, 2, 1);
  const std::vector<ClassifierSample> none;
  CHECK_THROWS_AS(train(model, CS(none), CS(none), TrainConfig{}), DataError);
}

TEST_CASE("two-phase identities") {
  const auto synth = toy::separable_set(3, 5, 20, 30);
  const auto synth_val = toy::separable_set(3, 5, 5, 31);
  TrainConfig cfg;
  cfg.max_epochs = 30;
  cfg.batch_size = 8;

  // Skipping phase 1 is plain train().
  auto a = fresh(3, 5, 4);
  auto b = fresh(3, 5, 4);
  const auto tp = two_phase(a, CS(synth), CS(synth_val), CS(synth), CS(synth_val), cfg, true);
  const auto plain = train(b, CS(synth), CS(synth_val), cfg);
  CHECK(!tp.synthetic.has_value());
  CHECK(tp.real == plain);
  CHECK(a.head().weights == b.head().weights);

  // Phase 2 starts from phase 1's best weights, whose loss is the reported best.
  auto c = fresh(3, 5, 4);
  const auto phase1 = train(c, CS(synth), CS(synth_val), cfg);
  CHECK(c.loss(CS(synth_val)) == doctest::Approx(phase1.best_val_loss).epsilon(1e-12));
  auto d = fresh(3, 5, 4);
  const auto both = two_phase(d, CS(synth), CS(synth_val), CS(synth), CS(synth_val), cfg);
  REQUIRE(both.synthetic.has_value());
  CHECK(*both.synthetic == phase1);

  // Real data as a perturbation of the synthetic set: transfer beats a fresh head.
  auto real = synth;
  auto real_val = synth_val;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> jitter(0.0, 0.05);
  for (auto* set : {&real, &real_val}) {
    for (auto& s : *set) {
      for (auto& v : s.features) v = 1.1 * v + jitter(rng);
    }
  }
  auto pre = fresh(3, 5, 4);
  train(pre, CS(synth), CS(synth_val), cfg);
  const auto random_head = fresh(3, 5, 4);
  CHECK(pre.loss(CS(real_val)) <= random_head.loss(CS(real_val)));

  const std::vector<ClassifierSample> none;
  auto e = fresh(3, 5, 4);
  CHECK_THROWS_AS(two_phase(e, CS(none), CS(none), CS(synth), CS(synth_val), cfg), DataError);
  CHECK_THROWS_AS(two_phase(e, CS(synth), CS(synth_val), CS(none), CS(none), cfg), DataError);
}

TEST_CASE("classifier bundle survives training") {
  const auto data = toy::separable_set(2, 3, 10, 1);
  auto model = fresh(2, 3, 1);
  TrainConfig cfg;
  cfg.max_epochs = 5;
  train(model, CS(data), CS(data), cfg);
  const auto back = classifier_from_bundle(to_bundle(model.head()));
  CHECK(back.weights == model.head().weights);
}
