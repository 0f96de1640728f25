#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "gesture/caption.hpp"
#include "gesture/error.hpp"
#include "gesture/trainer.hpp"
#include "support.hpp"

using namespace gesture;

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

FeatureVector features(std::vector<float> v) {
  const auto n = v.size();
  return FeatureVector{Tensor({n}, std::move(v))};
}

const std::vector<std::string> kCorpus{"a red mug on a desk", "the blue book near a lamp", "green keys"};

}  // namespace

TEST_CASE("tokenize and vocabulary") {
  CHECK(tokenize("A Red, mug!  on\ta desk.") == std::vector<std::string>{"a", "red", "mug", "on", "a", "desk"});
  const auto v = Vocabulary::build(kCorpus);
  CHECK(v.token(Vocabulary::kPad) == "<pad>");
  CHECK(v.token(Vocabulary::kStart) == "startseq");
  CHECK(v.token(Vocabulary::kEnd) == "endseq");
  CHECK(v.index("never") == Vocabulary::kUnknown);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v.index(v.token(i)) == i);
  const auto enc = v.encode("green keys");
  REQUIRE(enc.size() == 4);
  CHECK(enc.front() == Vocabulary::kStart);
  CHECK(enc.back() == Vocabulary::kEnd);
  CHECK(v.token(enc[1]) == "green");

  test::TempDir dir("vocab");
  v.save(dir / "vocab.txt");
  const auto back = Vocabulary::load(dir / "vocab.txt");
  REQUIRE(back.size() == v.size());
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(back.token(i) == v.token(i));
}

TEST_CASE("lstm step matches the hand-unrolled gate equations") {
  // 2 units, 1-d input; rows are gate blocks i, f, o, g over [x; h1; h2].
  Tensor W({8, 3}, std::vector<float>{0.1f, 0.2f, -0.1f,  0.3f,  -0.2f, 0.1f,   // i
                                      0.0f, 0.1f, 0.2f,   -0.3f, 0.2f,  0.0f,   // f
                                      0.5f, -0.1f, 0.1f,  0.2f,  0.0f,  -0.2f,  // o
                                      -0.4f, 0.3f, 0.2f,  0.1f,  0.1f,  0.3f});  // g
  Tensor b({8}, std::vector<float>{0.0f, 0.1f, 1.0f, 1.0f, -0.1f, 0.0f, 0.2f, -0.2f});
  const std::vector<double> x{0.7};
  const LstmState prev{{0.2, -0.5}, {0.4, -0.1}};
  const auto next = lstm_step(W, b, x, prev);

  auto row = [&](int r) {
    return W.at(r, 0) * 0.7 + W.at(r, 1) * 0.2 + W.at(r, 2) * -0.5 + b[static_cast<std::size_t>(r)];
  };
  for (int u = 0; u < 2; ++u) {
    const double i = sigmoid(row(u));
    const double f = sigmoid(row(2 + u));
    const double o = sigmoid(row(4 + u));
    const double g = std::tanh(row(6 + u));
    const double c = f * prev.c[static_cast<std::size_t>(u)] + i * g;
    const double h = o * std::tanh(c);
    CHECK(next.c[static_cast<std::size_t>(u)] == doctest::Approx(c).epsilon(1e-6));
    CHECK(next.h[static_cast<std::size_t>(u)] == doctest::Approx(h).epsilon(1e-6));
  }
}

TEST_CASE("caption_step is a deterministic distribution") {
  std::mt19937_64 rng(3);
  CaptionConfig cfg{5, 9, 6, 4};
  const auto w = CaptionWeights::random(cfg, 0.3, rng);
  const auto f = features({0.1f, 0.5f, 0.0f, 0.9f, 0.3f});
  const std::vector<std::size_t> prefix{Vocabulary::kStart, 5, 7};
  const auto p = caption_step(w, f, prefix);
  CHECK(p.size() == 9);
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(caption_step(w, f, prefix) == p);
  CHECK_THROWS_AS(caption_step(w, f, std::vector<std::size_t>{}), ParameterError);
  CHECK_THROWS_AS(caption_step(w, features({1.0f}), prefix), ParameterError);
}

TEST_CASE("decode stops at endseq and never exceeds max_len") {
  std::vector<std::string> tokens{"alpha", "beta"};
  const auto vocab = Vocabulary::build(tokens);
  CaptionConfig cfg{3, vocab.size(), 4, 3};
  auto w = CaptionWeights::zeros(cfg);
  w.out_b[Vocabulary::kEnd] = 5.0f;
  const auto f = features({1, 2, 3});
  const auto empty = decode(w, vocab, f, 10);
  CHECK(empty.tokens.empty());
  CHECK(empty.text.empty());

  w.out_b[Vocabulary::kEnd] = 0.0f;
  w.out_b[vocab.index("beta")] = 5.0f;
  for (std::size_t n : {1u, 3u, 7u}) {
    const auto c = decode(w, vocab, f, n);
    CHECK(c.tokens.size() == n);
    CHECK(c.text.find("endseq") == std::string::npos);
  }
  CHECK_THROWS_AS(decode(w, vocab, f, 0), ParameterError);

  std::mt19937_64 rng(8);
  const auto r = CaptionWeights::random(cfg, 1.0, rng);
  for (int n = 0; n < 20; ++n) {
    const auto f2 = features({static_cast<float>(n), 1.0f, -1.0f});
    const auto c = decode(r, vocab, f2, 5);
    CHECK(c.tokens.size() <= 5);
    CHECK(decode(r, vocab, f2, 5).text == c.text);
  }
}

TEST_CASE("postprocess examples and idempotence") {
  CHECK(postprocess("A hand is pointing to a red mug on a desk") == "A red mug on a desk");
  CHECK(postprocess("A man riding a bike") == "A man riding a bike");
  CHECK(postprocess("a finger pointing at the lamp") == "The lamp");
  CHECK(postprocess("A hand and a blue book") == "A blue book");
  CHECK(postprocess("a hand and a finger is pointing to keys") == "Keys");
  const std::vector<std::string> corpus{"A hand is pointing to a red mug",   "the hands and the finger pointing to x",
                                        "A man riding a bike",               "hand",
                                        "",                                  "A HAND IS POINTING TO A HAND AND A CUP",
                                        "a finger is pointing to a finger"};
  for (const auto& s : corpus) CHECK(postprocess(postprocess(s)) == postprocess(s));
}

TEST_CASE("caption bundle and model directory round trip") {
  std::mt19937_64 rng(1);
  const auto vocab = Vocabulary::build(kCorpus);
  CaptionConfig cfg{4, vocab.size(), 5, 3};
  const auto w = CaptionWeights::random(cfg, 0.2, rng);
  test::TempDir dir("cap");
  save_caption_model(w, vocab, dir.path());
  const auto [back, v2] = load_caption_model(dir.path());
  CHECK(back.lstm_w == w.lstm_w);
  CHECK(back.embedding == w.embedding);
  CHECK(v2.size() == vocab.size());
  const auto f = features({0.1f, 0.2f, 0.3f, 0.4f});
  CHECK(decode(back, v2, f, 6).text == decode(w, vocab, f, 6).text);
}

TEST_CASE("caption gradients match central differences") {
  std::mt19937_64 rng(6);
  CaptionConfig cfg{3, 5, 4, 3};
  CaptionModel model(CaptionWeights::random(cfg, 0.5, rng));
  const std::vector<CaptionSample> batch{{{0.5, -0.2, 0.8}, {1, 4, 3, 2}}, {{-0.1, 0.9, 0.3}, {1, 3, 2}},
                                         {{0.2, 0.2, -0.7}, {1, 4, 4, 3, 2}}};
  const auto check = gradient_check(
      model, std::span<const CaptionSample>(batch),
      [](const CaptionModel& m, std::span<const CaptionSample> b) { return m.loss(b); }, 80, 1e-3, 4);
  CHECK(check.coordinates == 80);
  CHECK(check.max_relative_error <= 1e-3);
}

TEST_CASE("toy caption head overfits three captions") {
  const auto vocab = Vocabulary::build(kCorpus);
  std::vector<CaptionSample> samples;
  for (std::size_t i = 0; i < kCorpus.size(); ++i) {
    std::vector<double> f(3, 0.0);
    f[i] = 1.0;
    samples.push_back({f, vocab.encode(kCorpus[i])});
  }
  std::mt19937_64 rng(2);
  CaptionModel model(CaptionWeights::random(CaptionConfig{3, vocab.size(), 24, 12}, 0.05, rng));
  TrainConfig cfg;
  cfg.max_epochs = 1500;
  cfg.batch_size = 1;
  cfg.patience = 1500;
  const std::span<const CaptionSample> s(samples);
  const auto report = train(model, s, s, cfg);
  MESSAGE("caption toy loss " << report.best_val_loss << " at epoch " << report.best_epoch);
  CHECK(report.best_val_loss < 0.1);
  for (std::size_t i = 0; i < kCorpus.size(); ++i) {
    std::vector<float> f(3, 0.0f);
    f[i] = 1.0f;
    const auto fv = features(f);
    const std::vector<std::size_t> start{Vocabulary::kStart};
    CHECK(nn::argmax(caption_step(model.weights(), fv, start)) == vocab.index(tokenize(kCorpus[i]).front()));
    CHECK(decode(model.weights(), vocab, fv, 12).text == kCorpus[i]);
  }
}
