#pragma once

#include <optional>
#include <span>
#include <vector>

#include "gesture/labels.hpp"

namespace gesture {

// Validates a raw label once it has been seen on k consecutive frames.
// Labels fed to step() must already be collapsed (negatives as kNegativeLabel).
class TemporalGate {
 public:
  explicit TemporalGate(int k = 2);

  struct Step {
    std::optional<LabelId> validated;  // empty until the first validation
    bool changed = false;
  };

  Step step(LabelId raw);
  void reset();

  int k() const { return k_; }
  std::optional<LabelId> current() const { return current_; }
  std::optional<LabelId> candidate() const { return candidate_; }
  int run_length() const { return run_; }

 private:
  int k_;
  std::optional<LabelId> current_;
  std::optional<LabelId> candidate_;
  int run_ = 0;
};

struct LabeledDecision {
  LabelId raw = 0;
  LabelId truth = 0;
};

struct KScore {
  int k = 1;
  double f1 = 0.0;
};

// Macro-F1 of the gated outputs against truth for each k; frames without a
// validated output count as negative predictions. Labels are collapsed first.
// A gate validates a label k-1 frames after it starts, so by default the output
// at frame t is scored against the truth of frame t-k+1 and the first k-1
// outputs are skipped; latency_aligned=false scores every frame against its own truth.
std::vector<KScore> evaluate_k(std::span<const LabeledDecision> stream, std::span<const int> ks,
                               const LabelRegistry& registry, bool latency_aligned = true);

}  // namespace gesture
