#include "gesture/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <numeric>

#include "gesture/error.hpp"

namespace gesture {

ConfusionTally::ConfusionTally(std::vector<std::string> class_names) : classes(std::move(class_names)) {
  counts.resize(classes.size());
}

std::size_t ConfusionTally::index_of(const std::string& name) {
  auto it = std::find(classes.begin(), classes.end(), name);
  if (it != classes.end()) return static_cast<std::size_t>(it - classes.begin());
  classes.push_back(name);
  counts.emplace_back();
  return classes.size() - 1;
}

void ConfusionTally::add(const std::string& truth, const std::string& predicted) {
  const auto t = index_of(truth);
  const auto p = index_of(predicted);
  if (t == p) {
    ++counts[t].tp;
  } else {
    ++counts[p].fp;
    ++counts[t].fn;
  }
}

ClassScores prf1(const ClassTally& tally) {
  ClassScores s;
  const auto pd = tally.tp + tally.fp;
  const auto rd = tally.tp + tally.fn;
  s.precision = pd ? static_cast<double>(tally.tp) / static_cast<double>(pd) : 0.0;
  s.recall = rd ? static_cast<double>(tally.tp) / static_cast<double>(rd) : 0.0;
  const double sum = s.precision + s.recall;
  s.f1 = sum > 0.0 ? 2.0 * s.precision * s.recall / sum : 0.0;
  return s;
}

PRF1 prf1(const ConfusionTally& tally) {
  PRF1 out;
  for (const auto& c : tally.counts) out.per_class.push_back(prf1(c));
  if (out.per_class.empty()) return out;
  const double n = static_cast<double>(out.per_class.size());
  for (const auto& s : out.per_class) {
    out.macro_precision += s.precision / n;
    out.macro_recall += s.recall / n;
    out.macro_f1 += s.f1 / n;
  }
  return out;
}

PRF1 classification_scores(std::span<const std::string> truth, std::span<const std::string> predicted) {
  if (truth.size() != predicted.size()) throw ParameterError("truth and prediction counts differ");
  ConfusionTally tally;
  for (const auto& t : truth) tally.index_of(t);
  for (const auto& p : predicted) tally.index_of(p);
  for (std::size_t i = 0; i < truth.size(); ++i) tally.add(truth[i], predicted[i]);
  return prf1(tally);
}

namespace {

std::vector<std::size_t> confidence_order(const DetectionRecord& record) {
  std::vector<std::size_t> order(record.predictions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return record.predictions[a].confidence > record.predictions[b].confidence;
  });
  return order;
}

PredictionMatch claim(const DetectionRecord& record, std::size_t pred, std::vector<bool>& claimed, double lambda) {
  PredictionMatch m;
  m.prediction = pred;
  const auto& box = record.predictions[pred].box;
  for (std::size_t t = 0; t < record.truths.size(); ++t) {
    const double v = iou(box, record.truths[t]);
    if (v > m.iou) {
      m.iou = v;
      m.truth = static_cast<int>(t);
    }
  }
  if (m.truth >= 0 && m.iou >= lambda && !claimed[static_cast<std::size_t>(m.truth)]) {
    m.true_positive = true;
    claimed[static_cast<std::size_t>(m.truth)] = true;
  }
  return m;
}

}  // namespace

std::vector<PredictionMatch> match_detections(const DetectionRecord& record, double lambda) {
  std::vector<bool> claimed(record.truths.size(), false);
  std::vector<PredictionMatch> out;
  for (auto p : confidence_order(record)) out.push_back(claim(record, p, claimed, lambda));
  return out;
}

ClassTally detection_tally(std::span<const DetectionRecord> records, double lambda) {
  ClassTally t;
  for (const auto& r : records) {
    std::size_t hits = 0;
    for (const auto& m : match_detections(r, lambda)) {
      if (m.true_positive) {
        ++hits;
      } else {
        ++t.fp;
      }
    }
    t.tp += hits;
    t.fn += r.truths.size() - hits;
  }
  return t;
}

double detection_f1(std::span<const DetectionRecord> records, double lambda) {
  return prf1(detection_tally(records, lambda)).f1;
}

std::optional<double> average_precision(std::span<const DetectionRecord> records, double lambda) {
  std::size_t positives = 0;
  struct Ranked {
    std::size_t record;
    std::size_t pred;
    double confidence;
  };
  std::vector<Ranked> ranked;
  for (std::size_t r = 0; r < records.size(); ++r) {
    positives += records[r].truths.size();
    for (std::size_t p = 0; p < records[r].predictions.size(); ++p) {
      ranked.push_back({r, p, records[r].predictions[p].confidence});
    }
  }
  if (positives == 0) {
    warn("average precision undefined: no ground truth");
    return std::nullopt;
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& a, const Ranked& b) { return a.confidence > b.confidence; });

  std::vector<std::vector<bool>> claimed;
  for (const auto& r : records) claimed.emplace_back(r.truths.size(), false);
  std::vector<double> recall, precision;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& item = ranked[i];
    if (claim(records[item.record], item.pred, claimed[item.record], lambda).true_positive) ++tp;
    recall.push_back(static_cast<double>(tp) / static_cast<double>(positives));
    precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
  }

  // Precision envelope, then area under the stepwise curve.
  std::vector<double> mrec{0.0};
  std::vector<double> mpre{0.0};
  mrec.insert(mrec.end(), recall.begin(), recall.end());
  mpre.insert(mpre.end(), precision.begin(), precision.end());
  mrec.push_back(1.0);
  mpre.push_back(0.0);
  for (std::size_t i = mpre.size() - 1; i > 0; --i) mpre[i - 1] = std::max(mpre[i - 1], mpre[i]);
  double ap = 0.0;
  for (std::size_t i = 1; i < mrec.size(); ++i) {
    if (mrec[i] != mrec[i - 1]) ap += (mrec[i] - mrec[i - 1]) * mpre[i];
  }
  return ap;
}

double mean_ap(std::span<const std::optional<double>> per_class_ap) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& ap : per_class_ap) {
    if (!ap) continue;
    sum += *ap;
    ++n;
  }
  if (n == 0) {
    warn("mAP undefined: no class has ground truth");
    return 0.0;
  }
  return sum / static_cast<double>(n);
}

double avg_iou(std::span<const DetectionRecord> records, double lambda) {
  double sum = 0.0;
  std::size_t terms = 0;
  for (const auto& r : records) {
    std::size_t hits = 0;
    for (const auto& m : match_detections(r, lambda)) {
      ++terms;
      if (m.true_positive) {
        sum += m.iou;
        ++hits;
      }
    }
    terms += r.truths.size() - hits;
  }
  if (terms == 0) {
    warn("average IoU undefined: no predictions and no ground truth");
    return 0.0;
  }
  return sum / static_cast<double>(terms);
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const Tokens& tokens, int n) {
  NgramCounts counts;
  if (tokens.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

struct SentenceStats {
  std::vector<std::size_t> clipped;  // index k-1 for k-grams
  std::vector<std::size_t> total;
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;
};

SentenceStats sentence_stats(const Tokens& candidate, std::span<const Tokens> references, int n) {
  if (n < 1 || n > 4) throw ParameterError("BLEU order must be in 1..4");
  if (references.empty()) throw ParameterError("BLEU needs at least one reference");
  SentenceStats s;
  s.candidate_length = candidate.size();
  // closest reference length, ties to the shorter one
  std::size_t best = references[0].size();
  for (const auto& ref : references) {
    const auto d = [&](std::size_t len) {
      return len > candidate.size() ? len - candidate.size() : candidate.size() - len;
    };
    if (d(ref.size()) < d(best) || (d(ref.size()) == d(best) && ref.size() < best)) best = ref.size();
  }
  s.reference_length = best;
  for (int k = 1; k <= n; ++k) {
    const auto cand = ngrams(candidate, k);
    NgramCounts max_ref;
    for (const auto& ref : references) {
      for (const auto& [gram, count] : ngrams(ref, k)) max_ref[gram] = std::max(max_ref[gram], count);
    }
    std::size_t clipped = 0;
    std::size_t total = 0;
    for (const auto& [gram, count] : cand) {
      total += count;
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) clipped += std::min(count, it->second);
    }
    s.clipped.push_back(clipped);
    s.total.push_back(total);
  }
  return s;
}

double combine(const std::vector<std::size_t>& clipped, const std::vector<std::size_t>& total, std::size_t c,
               std::size_t r) {
  if (c == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t k = 0; k < clipped.size(); ++k) {
    if (clipped[k] == 0 || total[k] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(clipped[k]) / static_cast<double>(total[k]));
  }
  const double geo = std::exp(log_sum / static_cast<double>(clipped.size()));
  const double bp = c < r ? std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c)) : 1.0;
  return bp * geo;
}

}  // namespace

double bleu(const Tokens& candidate, std::span<const Tokens> references, int n) {
  const auto s = sentence_stats(candidate, references, n);
  return combine(s.clipped, s.total, s.candidate_length, s.reference_length);
}

double corpus_bleu(std::span<const Tokens> candidates, std::span<const std::vector<Tokens>> references, int n) {
  if (candidates.size() != references.size()) throw ParameterError("corpus BLEU: candidate/reference count mismatch");
  std::vector<std::size_t> clipped(static_cast<std::size_t>(std::max(n, 0)), 0);
  std::vector<std::size_t> total(clipped.size(), 0);
  std::size_t c = 0;
  std::size_t r = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto s = sentence_stats(candidates[i], references[i], n);
    for (std::size_t k = 0; k < clipped.size(); ++k) {
      clipped[k] += s.clipped[k];
      total[k] += s.total[k];
    }
    c += s.candidate_length;
    r += s.reference_length;
  }
  return combine(clipped, total, c, r);
}

bool dominates(const ModelPoint& a, const ModelPoint& b) {
  const bool no_worse = a.f1 >= b.f1 && a.params <= b.params;
  const bool better = a.f1 > b.f1 || a.params < b.params;
  return no_worse && better;
}

std::vector<ModelPoint> pareto_front(std::span<const ModelPoint> points) {
  // Sweep by ascending params (then descending F1): a point survives when its
  // F1 beats everything cheaper, or ties the best F1 at exactly the same params.
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].params != points[b].params) return points[a].params < points[b].params;
    return points[a].f1 > points[b].f1;
  });
  std::vector<std::size_t> keep;
  double best_f1 = -std::numeric_limits<double>::infinity();
  double best_params = 0.0;
  for (auto i : order) {
    const auto& p = points[i];
    if (p.f1 > best_f1) {
      keep.push_back(i);
      best_f1 = p.f1;
      best_params = p.params;
    } else if (p.f1 == best_f1 && p.params == best_params) {
      keep.push_back(i);
    }
  }
  std::stable_sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].params != points[b].params) return points[a].params < points[b].params;
    return a < b;
  });
  std::vector<ModelPoint> out;
  for (auto i : keep) out.push_back(points[i]);
  return out;
}

ConfusionTally detector_classification_tally(std::span<const DetectorFrame> frames,
                                             const std::string& negative_label) {
  ConfusionTally tally;
  for (const auto& f : frames) {
    const auto truth = tally.index_of(f.truth_label);
    const DetectorFrame::Prediction* top = nullptr;
    for (const auto& p : f.predictions) {
      if (!top || p.confidence > top->confidence) top = &p;
    }
    if (f.truth_label == negative_label) {
      if (!top) {
        ++tally.counts[truth].tp;
      } else {
        ++tally.counts[tally.index_of(top->label)].fp;
        ++tally.counts[tally.index_of(f.truth_label)].fn;
      }
      continue;
    }
    if (!top) {
      ++tally.counts[truth].fn;
      continue;
    }
    const bool located = f.truth_box && iou(top->box, *f.truth_box) > 0.5;
    if (top->label == f.truth_label && located) {
      ++tally.counts[truth].tp;
    } else {
      ++tally.counts[tally.index_of(top->label)].fp;
      ++tally.counts[tally.index_of(f.truth_label)].fn;
    }
  }
  return tally;
}

}  // namespace gesture
