#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gesture/backbone.hpp"
#include "gesture/labels.hpp"
#include "gesture/tensor.hpp"

namespace gesture {

// Filter Selection parameters. Exactly one of alpha / top_n selects filters:
// alpha keeps every filter whose mean IoU exceeds it, top_n keeps the n best.
struct FSParams {
  std::string layer = "stage2";
  std::optional<double> alpha;
  std::optional<std::size_t> top_n = 4;
  double beta = 0.92;
  int kernel = 7;
  long long min_area = 1;

  void validate() const;
};

struct FilterEntry {
  std::size_t filter = 0;
  double score = 0.0;

  bool operator==(const FilterEntry&) const = default;
};

// Selected filters of one layer for one class, best score first.
struct FilterSet {
  std::string class_name;
  std::string layer;
  std::vector<FilterEntry> entries;
  // Threshold parameters used during selection; localize defaults to them.
  double beta = 0.92;
  int kernel = 7;
  long long min_area = 1;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

struct LocalizationResult {
  std::vector<BBox> boxes;
  std::vector<double> confidences;  // mean upsampled heat inside each box
  Tensor heat;                      // mean of the rescaled selected maps
};

// One image of I^c: the frame and its ground-truth boxes for the class.
struct LabeledFrame {
  Tensor frame;
  std::vector<BBox> truths;
};

// Prediction set of a single activation map: rescale to [0,1], resize to the
// image extent, keep > beta, dilate with s x s, then connected blobs.
std::vector<BBox> filter_predictions(const Tensor& map, int width, int height, double beta, int s,
                                     long long min_area = 1);

// Same pipeline starting from a map already in [0,1] (no rescale).
std::vector<BBox> unit_map_predictions(const Tensor& unit_map, int width, int height, double beta, int s,
                                       long long min_area = 1);

// Mean IoU of every filter of one layer over the class images.
std::vector<double> score_filters(std::span<const ActivationStack> stacks,
                                  std::span<const std::vector<BBox>> truths, double beta, int s,
                                  long long min_area);

// Keeps filters by alpha or top_n from the given scores; ties favour the lower index.
std::vector<FilterEntry> choose_filters(std::span<const double> scores, const FSParams& params);

FilterSet select_filters(const Backbone& backbone, std::span<const LabeledFrame> images, const FSParams& params,
                         const std::string& class_name);

LocalizationResult localize(const ActivationStack& stack, const FilterSet& fset, double beta, int s,
                            long long min_area);
LocalizationResult localize(const Backbone& backbone, const Tensor& frame, const FilterSet& fset,
                            const FSParams& params);

void save_filter_set(const FilterSet& fset, const std::filesystem::path& path);
FilterSet load_filter_set(const std::filesystem::path& path);
std::string format_filter_set(const FilterSet& fset);
FilterSet parse_filter_set(const std::string& text);

// Parameter study over layer, |F^c|, beta and s.
struct SweepGrid {
  std::vector<std::string> layers;
  std::vector<std::size_t> top_n;
  std::vector<double> betas;
  std::vector<int> kernels;

  std::size_t size() const { return layers.size() * top_n.size() * betas.size() * kernels.size(); }
};

struct SweepRow {
  std::string layer;
  std::size_t top_n = 0;
  double beta = 0.0;
  int kernel = 1;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::size_t best = 0;  // first row with the maximal F1
};

// Filters are selected on `selection` and scored with detection F1 at lambda on `evaluation`.
SweepTable sweep(const Backbone& backbone, std::span<const LabeledFrame> selection,
                 std::span<const LabeledFrame> evaluation, const SweepGrid& grid, long long min_area = 1,
                 double lambda = 0.5);

std::string sweep_csv(const SweepTable& table);

}  // namespace gesture
