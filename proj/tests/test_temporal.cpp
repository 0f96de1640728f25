#include <random>

#include "doctest.h"
#include "gesture/error.hpp"
#include "gesture/temporal.hpp"

using namespace gesture;

namespace {

using Out = std::vector<std::optional<LabelId>>;

Out run(int k, const std::vector<LabelId>& raw) {
  TemporalGate gate(k);
  Out out;
  for (auto r : raw) out.push_back(gate.step(r).validated);
  return out;
}

// Independent restatement of the rule: the output switches to label L at frame
// t when raw[t-k+1..t] are all L and L differs from the current output.
Out oracle(int k, const std::vector<LabelId>& raw) {
  Out out;
  std::optional<LabelId> cur;
  for (std::size_t t = 0; t < raw.size(); ++t) {
    if (raw[t] != cur && t + 1 >= static_cast<std::size_t>(k)) {
      bool run = true;
      for (std::size_t j = t + 1 - static_cast<std::size_t>(k); j <= t; ++j) run = run && raw[j] == raw[t];
      if (run) cur = raw[t];
    }
    out.push_back(cur);
  }
  return out;
}

constexpr LabelId A = labels::Point;
constexpr LabelId B = labels::Loupe;

}  // namespace

TEST_CASE("gate examples") {
  CHECK(run(2, {A, A}) == Out{std::nullopt, A});
  CHECK(run(2, {A, A, B, A, A}) == Out{std::nullopt, A, A, A, A});
  const std::vector<LabelId> mixed{A, B, A, kNegativeLabel, B, B};
  const auto k1 = run(1, mixed);
  for (std::size_t i = 0; i < mixed.size(); ++i) CHECK(k1[i] == mixed[i]);
  CHECK_THROWS_AS(TemporalGate(0), ParameterError);
}

TEST_CASE("gate reports changes and holds the validated label") {
  TemporalGate gate(3);
  CHECK(!gate.step(A).changed);
  CHECK(!gate.step(A).changed);
  auto s = gate.step(A);
  CHECK(s.changed);
  CHECK(s.validated == A);
  CHECK(gate.candidate() == std::nullopt);
  gate.step(B);
  gate.step(B);
  CHECK(gate.run_length() == 2);
  CHECK(gate.candidate() == B);
  s = gate.step(A);  // back to current: candidate cleared
  CHECK(!s.changed);
  CHECK(s.validated == A);
  CHECK(gate.run_length() == 0);
  gate.step(kNegativeLabel);
  gate.step(kNegativeLabel);
  s = gate.step(kNegativeLabel);
  CHECK(s.changed);
  CHECK(s.validated == kNegativeLabel);
  gate.reset();
  CHECK(gate.current() == std::nullopt);
}

TEST_CASE("gate matches the window rule, keeps its invariants and never returns to unset") {
  std::mt19937_64 rng(42);
  for (int n = 0; n < 300; ++n) {
    const int k = 1 + static_cast<int>(rng() % 4);
    std::vector<LabelId> raw(1 + rng() % 40);
    for (auto& r : raw) r = static_cast<LabelId>(rng() % 3);
    TemporalGate gate(k);
    bool seen = false;
    Out out;
    for (auto r : raw) {
      const auto s = gate.step(r);
      out.push_back(s.validated);
      CHECK(gate.run_length() <= k);
      if (gate.run_length() > 0) CHECK(gate.candidate() != gate.current());
      if (seen) CHECK(s.validated.has_value());
      seen = seen || s.validated.has_value();
    }
    CHECK(out == oracle(k, raw));
    CHECK(out == run(k, raw));  // replay
  }
}

TEST_CASE("evaluate_k examples") {
  const auto reg = LabelRegistry::standard();
  std::vector<LabeledDecision> clean;
  for (LabelId g : {labels::Point, labels::Loupe, labels::None, labels::Pinch}) {
    for (int i = 0; i < 6; ++i) clean.push_back({g, g});
  }
  const std::vector<int> ks{1, 2, 3};
  const auto scores = evaluate_k(clean, ks, reg);
  REQUIRE(scores.size() == 3);
  CHECK(scores[1].f1 == doctest::Approx(scores[0].f1));
  CHECK(scores[2].f1 == doctest::Approx(scores[0].f1));

  // Every error is a single isolated frame.
  auto noisy = clean;
  for (std::size_t i = 2; i < noisy.size(); i += 6) noisy[i].raw = labels::Drag;
  const auto ns = evaluate_k(noisy, ks, reg);
  CHECK(ns[1].f1 > ns[0].f1);

  // Two-frame segments never validate at k = 5.
  std::vector<LabeledDecision> shortseg;
  for (int rep = 0; rep < 5; ++rep) {
    for (LabelId g : {labels::Point, labels::Loupe, labels::Pinch}) {
      shortseg.push_back({g, g});
      shortseg.push_back({g, g});
    }
  }
  const std::vector<int> k15{1, 5};
  const auto ss = evaluate_k(shortseg, k15, reg);
  CHECK(ss[1].f1 < ss[0].f1);

  CHECK_THROWS_AS(evaluate_k(std::vector<LabeledDecision>{}, ks, reg), DataError);
}

TEST_CASE("evaluate_k without latency alignment charges the validation lag") {
  const auto reg = LabelRegistry::standard();
  // [Point x4, Loupe x4]: at k=2 frames 0 and 4 disagree with their own truth.
  std::vector<LabeledDecision> s;
  for (int i = 0; i < 4; ++i) s.push_back({labels::Point, labels::Point});
  for (int i = 0; i < 4; ++i) s.push_back({labels::Loupe, labels::Loupe});
  const std::vector<int> ks{1, 2};
  const auto aligned = evaluate_k(s, ks, reg);
  CHECK(aligned[1].f1 == doctest::Approx(1.0));
  const auto raw = evaluate_k(s, ks, reg, false);
  CHECK(raw[0].f1 == doctest::Approx(1.0));
  // Point: TP 3, FP 1, FN 1. Loupe: TP 3, FN 1. Negative: FP 1.
  const double point = 2.0 * 3 / (2.0 * 3 + 1 + 1);
  const double loupe = 2.0 * 3 / (2.0 * 3 + 1);
  CHECK(raw[1].f1 == doctest::Approx((point + loupe + 0.0) / 3.0).epsilon(1e-12));
}

TEST_CASE("evaluate_k collapses Other and None") {
  const auto reg = LabelRegistry::standard();
  std::vector<LabeledDecision> s;
  for (int i = 0; i < 4; ++i) s.push_back({labels::Other, labels::None});
  const std::vector<int> k1{1};
  CHECK(evaluate_k(s, k1, reg)[0].f1 == doctest::Approx(1.0));
}
