#include "gesture/temporal.hpp"

#include <string>

#include "gesture/error.hpp"
#include "gesture/metrics.hpp"

namespace gesture {

TemporalGate::TemporalGate(int k) : k_(k) {
  if (k < 1) throw ParameterError("k must be >= 1");
}

TemporalGate::Step TemporalGate::step(LabelId raw) {
  if (current_ && *current_ == raw) {
    candidate_.reset();
    run_ = 0;
    return {current_, false};
  }
  if (candidate_ && *candidate_ == raw) {
    ++run_;
  } else {
    candidate_ = raw;
    run_ = 1;
  }
  if (run_ >= k_) {
    current_ = raw;
    candidate_.reset();
    run_ = 0;
    return {current_, true};
  }
  return {current_, false};
}

void TemporalGate::reset() {
  current_.reset();
  candidate_.reset();
  run_ = 0;
}

std::vector<KScore> evaluate_k(std::span<const LabeledDecision> stream, std::span<const int> ks,
                               const LabelRegistry& registry, bool latency_aligned) {
  if (stream.empty()) throw DataError("empty stream");
  std::vector<KScore> out;
  for (int k : ks) {
    TemporalGate gate(k);
    ConfusionTally tally;
    const std::size_t lag = latency_aligned ? static_cast<std::size_t>(k - 1) : 0;
    if (lag >= stream.size()) warn("stream shorter than k; nothing scored for k=" + std::to_string(k));
    for (std::size_t t = 0; t < stream.size(); ++t) {
      const auto step = gate.step(registry.collapse(stream[t].raw));
      if (t < lag) continue;
      const LabelId pred = step.validated.value_or(kNegativeLabel);
      tally.add(registry.display_name(registry.collapse(stream[t - lag].truth)), registry.display_name(pred));
    }
    out.push_back({k, prf1(tally).macro_f1});
  }
  return out;
}

}  // namespace gesture
