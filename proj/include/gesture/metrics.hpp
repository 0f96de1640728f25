#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gesture/tensor.hpp"

namespace gesture {

struct ClassTally {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  ClassTally& operator+=(const ClassTally& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

// Per-class TP/FP/FN counts in a fixed class order.
struct ConfusionTally {
  std::vector<std::string> classes;
  std::vector<ClassTally> counts;

  explicit ConfusionTally(std::vector<std::string> class_names = {});
  std::size_t index_of(const std::string& name);  // appends unseen classes
  // One single-label decision: a hit is a TP, a miss is an FP for the
  // predicted class and an FN for the true one.
  void add(const std::string& truth, const std::string& predicted);
};

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct PRF1 {
  std::vector<ClassScores> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

// Zero denominators yield 0.
ClassScores prf1(const ClassTally& tally);
PRF1 prf1(const ConfusionTally& tally);

// Classification scores from paired label sequences; classes are those seen in
// either sequence, in order of first appearance in truth then predictions.
PRF1 classification_scores(std::span<const std::string> truth, std::span<const std::string> predicted);

struct ScoredBox {
  BBox box;
  double confidence = 1.0;
};

// Predictions and ground truth of one image (single class).
struct DetectionRecord {
  std::vector<ScoredBox> predictions;
  std::vector<BBox> truths;
};

struct PredictionMatch {
  std::size_t prediction = 0;  // index into DetectionRecord::predictions
  bool true_positive = false;
  double iou = 0.0;            // IoU with the best-overlapping truth
  int truth = -1;              // that truth's index, -1 when none overlaps
};

// Predictions in descending confidence (ties keep input order) take the truth
// with the highest IoU; a hit needs IoU >= lambda and an unclaimed truth.
std::vector<PredictionMatch> match_detections(const DetectionRecord& record, double lambda);

ClassTally detection_tally(std::span<const DetectionRecord> records, double lambda = 0.5);
double detection_f1(std::span<const DetectionRecord> records, double lambda = 0.5);

// All-point interpolated AP over the pooled, confidence-ranked predictions.
// Returns nullopt (with a warning) when there is no ground truth.
std::optional<double> average_precision(std::span<const DetectionRecord> records, double lambda = 0.5);
// Unweighted mean over the defined per-class APs.
double mean_ap(std::span<const std::optional<double>> per_class_ap);

// Mean IoU over TP pairs, with FP predictions and missed truths contributing 0.
double avg_iou(std::span<const DetectionRecord> records, double lambda = 0.5);

using Tokens = std::vector<std::string>;

// Sentence BLEU-n (uniform weights, clipped counts, no smoothing).
double bleu(const Tokens& candidate, std::span<const Tokens> references, int n);
// Corpus BLEU-n: n-gram counts and lengths pooled before the geometric mean.
double corpus_bleu(std::span<const Tokens> candidates, std::span<const std::vector<Tokens>> references, int n);

struct ModelPoint {
  std::string name;
  double f1 = 0.0;      // percent
  double params = 1.0;  // parameter count
};

// a dominates b: f1 no worse, params no larger, one of them strictly better.
bool dominates(const ModelPoint& a, const ModelPoint& b);
// Non-dominated points by ascending params (ties keep input order).
std::vector<ModelPoint> pareto_front(std::span<const ModelPoint> points);

// Scores a single-box-per-image detector as a classifier: the highest-confidence
// prediction is a TP for its class when the label matches and IoU > 0.5; an image
// whose truth is the negative class is a TP when nothing is predicted.
struct DetectorFrame {
  std::string truth_label;
  std::optional<BBox> truth_box;
  struct Prediction {
    std::string label;
    BBox box;
    double confidence = 0.0;
  };
  std::vector<Prediction> predictions;
};

ConfusionTally detector_classification_tally(std::span<const DetectorFrame> frames,
                                             const std::string& negative_label = "None");

}  // namespace gesture
