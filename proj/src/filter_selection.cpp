#include "gesture/filter_selection.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "gesture/error.hpp"
#include "gesture/metrics.hpp"

namespace gesture {

void FSParams::validate() const {
  if (alpha.has_value() == top_n.has_value()) throw ParameterError("exactly one of alpha or top_n must be set");
  if (alpha && (*alpha < 0.0 || *alpha > 1.0)) throw ParameterError("alpha must be in [0,1]");
  if (top_n && *top_n == 0) throw ParameterError("top_n must be positive");
  if (beta < 0.0 || beta > 1.0) throw ParameterError("beta must be in [0,1]");
  if (kernel < 1 || kernel % 2 == 0) throw ParameterError("kernel must be odd and >= 1");
  if (min_area < 1) throw ParameterError("min_area must be >= 1");
}

std::vector<BBox> unit_map_predictions(const Tensor& unit_map, int width, int height, double beta, int s,
                                       long long min_area) {
  if (width <= 0 || height <= 0) throw ParameterError("image extent must be positive");
  const auto full = resize_bilinear(unit_map, width, height);
  return blobs(dilate(threshold(full, beta), s), min_area);
}

std::vector<BBox> filter_predictions(const Tensor& map, int width, int height, double beta, int s,
                                     long long min_area) {
  if (map.ndim() != 2) throw ParameterError("filter_predictions expects a 2-D map");
  return unit_map_predictions(rescale_unit(map), width, height, beta, s, min_area);
}

std::vector<double> score_filters(std::span<const ActivationStack> stacks,
                                  std::span<const std::vector<BBox>> truths, double beta, int s,
                                  long long min_area) {
  if (stacks.empty()) throw DataError("class image set is empty");
  if (stacks.size() != truths.size()) throw ParameterError("stack and ground-truth counts differ");
  const std::size_t filters = stacks.front().filters();
  std::vector<double> scores(filters, 0.0);
  for (std::size_t i = 0; i < stacks.size(); ++i) {
    if (truths[i].empty()) throw DataError("no ground truth");
    if (stacks[i].filters() != filters) throw DataError("activation stacks disagree on filter count");
    for (std::size_t f = 0; f < filters; ++f) {
      const auto preds = filter_predictions(stacks[i].map(f), stacks[i].source_width, stacks[i].source_height,
                                            beta, s, min_area);
      scores[f] += match_iou(preds, truths[i]);
    }
  }
  for (auto& v : scores) v /= static_cast<double>(stacks.size());
  return scores;
}

std::vector<FilterEntry> choose_filters(std::span<const double> scores, const FSParams& params) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<FilterEntry> out;
  for (auto f : order) {
    if (params.alpha) {
      if (scores[f] > *params.alpha) out.push_back({f, scores[f]});
    } else if (out.size() < *params.top_n) {
      out.push_back({f, scores[f]});
    }
  }
  return out;
}

FilterSet select_filters(const Backbone& backbone, std::span<const LabeledFrame> images, const FSParams& params,
                         const std::string& class_name) {
  params.validate();
  if (images.empty()) throw DataError("class image set is empty");
  const auto names = backbone.layer_names();
  if (std::find(names.begin(), names.end(), params.layer) == names.end()) {
    throw ParameterError("layer '" + params.layer + "' not found");
  }
  const std::vector<std::string> layers{params.layer};
  std::vector<ActivationStack> stacks;
  std::vector<std::vector<BBox>> truths;
  for (const auto& img : images) {
    if (img.truths.empty()) throw DataError("no ground truth");
    stacks.push_back(backbone.forward(img.frame, layers).stack(params.layer));
    truths.push_back(img.truths);
  }
  FilterSet fset;
  fset.class_name = class_name;
  fset.layer = params.layer;
  fset.entries = choose_filters(score_filters(stacks, truths, params.beta, params.kernel, params.min_area), params);
  fset.beta = params.beta;
  fset.kernel = params.kernel;
  fset.min_area = params.min_area;
  return fset;
}

LocalizationResult localize(const ActivationStack& stack, const FilterSet& fset, double beta, int s,
                            long long min_area) {
  if (fset.empty()) throw DataError("no filters selected");
  if (stack.layer_name != fset.layer) {
    throw ParameterError("filter set is for layer '" + fset.layer + "', got '" + stack.layer_name + "'");
  }
  Tensor heat({stack.height(), stack.width()});
  const double scale = 1.0 / static_cast<double>(fset.size());
  for (const auto& e : fset.entries) {
    if (e.filter >= stack.filters()) throw DataError("filter index out of range for layer");
    const auto r = rescale_unit(stack.map(e.filter));
    for (std::size_t k = 0; k < heat.size(); ++k) heat[k] += static_cast<float>(r[k] * scale);
  }
  LocalizationResult result;
  const auto full = resize_bilinear(heat, stack.source_width, stack.source_height);
  result.boxes = blobs(dilate(threshold(full, beta), s), min_area);
  for (const auto& b : result.boxes) {
    double sum = 0.0;
    for (int y = b.y0; y < b.y1; ++y) {
      for (int x = b.x0; x < b.x1; ++x) sum += full.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
    }
    result.confidences.push_back(sum / static_cast<double>(b.area()));
  }
  result.heat = std::move(heat);
  return result;
}

LocalizationResult localize(const Backbone& backbone, const Tensor& frame, const FilterSet& fset,
                            const FSParams& params) {
  if (fset.empty()) throw DataError("no filters selected");
  const std::vector<std::string> layers{fset.layer};
  const auto out = backbone.forward(frame, layers);
  return localize(out.stack(fset.layer), fset, params.beta, params.kernel, params.min_area);
}

std::string format_filter_set(const FilterSet& fset) {
  std::ostringstream out;
  out << "class " << fset.class_name << '\n';
  out << "layer " << fset.layer << '\n';
  out << "beta " << fset.beta << '\n';
  out << "kernel " << fset.kernel << '\n';
  out << "min_area " << fset.min_area << '\n';
  out << std::fixed << std::setprecision(6);
  for (const auto& e : fset.entries) out << "filter " << e.filter << ' ' << e.score << '\n';
  return out.str();
}

FilterSet parse_filter_set(const std::string& text) {
  FilterSet fset;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_class = false;
  bool have_layer = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    bool ok = true;
    if (key == "class") {
      ok = static_cast<bool>(ss >> fset.class_name);
      have_class = true;
    } else if (key == "layer") {
      ok = static_cast<bool>(ss >> fset.layer);
      have_layer = true;
    } else if (key == "beta") {
      ok = static_cast<bool>(ss >> fset.beta);
    } else if (key == "kernel") {
      ok = static_cast<bool>(ss >> fset.kernel);
    } else if (key == "min_area") {
      ok = static_cast<bool>(ss >> fset.min_area);
    } else if (key == "filter") {
      FilterEntry e;
      ok = static_cast<bool>(ss >> e.filter >> e.score);
      if (ok && (e.score < 0.0 || e.score > 1.0)) ok = false;
      for (const auto& other : fset.entries) ok = ok && other.filter != e.filter;
      fset.entries.push_back(e);
    } else {
      ok = false;
    }
    if (!ok) throw DataError("filter set line " + std::to_string(lineno) + ": malformed '" + line + "'");
  }
  if (!have_class || !have_layer) throw DataError("filter set needs 'class' and 'layer' lines");
  return fset;
}

void save_filter_set(const FilterSet& fset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << format_filter_set(fset);
}

FilterSet load_filter_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_filter_set(buf.str());
}

SweepTable sweep(const Backbone& backbone, std::span<const LabeledFrame> selection,
                 std::span<const LabeledFrame> evaluation, const SweepGrid& grid, long long min_area,
                 double lambda) {
  if (grid.size() == 0) throw ParameterError("empty sweep grid");
  if (selection.empty() || evaluation.empty()) throw DataError("sweep needs selection and evaluation images");

  // One backbone pass per image covering every swept layer.
  std::vector<std::string> layers = grid.layers;
  std::vector<BackboneOutput> sel_out;
  std::vector<BackboneOutput> eval_out;
  for (const auto& img : selection) sel_out.push_back(backbone.forward(img.frame, layers));
  for (const auto& img : evaluation) eval_out.push_back(backbone.forward(img.frame, layers));
  std::vector<std::vector<BBox>> sel_truths;
  for (const auto& img : selection) sel_truths.push_back(img.truths);

  SweepTable table;
  for (const auto& layer : grid.layers) {
    std::vector<ActivationStack> stacks;
    for (const auto& o : sel_out) stacks.push_back(o.stack(layer));
    for (double beta : grid.betas) {
      for (int s : grid.kernels) {
        const auto scores = score_filters(stacks, sel_truths, beta, s, min_area);
        for (auto n : grid.top_n) {
          FSParams p;
          p.layer = layer;
          p.top_n = n;
          p.beta = beta;
          p.kernel = s;
          p.min_area = min_area;
          p.validate();
          FilterSet fset{"sweep", layer, choose_filters(scores, p), beta, s, min_area};
          std::vector<DetectionRecord> records;
          for (std::size_t i = 0; i < evaluation.size(); ++i) {
            DetectionRecord rec;
            rec.truths = evaluation[i].truths;
            const auto loc = localize(eval_out[i].stack(layer), fset, beta, s, min_area);
            for (std::size_t b = 0; b < loc.boxes.size(); ++b) rec.predictions.push_back({loc.boxes[b], loc.confidences[b]});
            records.push_back(std::move(rec));
          }
          const auto scoresum = prf1(detection_tally(records, lambda));
          table.rows.push_back({layer, n, beta, s, scoresum.precision, scoresum.recall, scoresum.f1});
        }
      }
    }
  }
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    if (table.rows[i].f1 > table.rows[table.best].f1) table.best = i;
  }
  return table;
}

std::string sweep_csv(const SweepTable& table) {
  std::ostringstream out;
  out << "layer,top_n,beta,kernel,precision,recall,f1,best\n";
  out << std::setprecision(6);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    out << r.layer << ',' << r.top_n << ',' << r.beta << ',' << r.kernel << ',' << r.precision << ',' << r.recall
        << ',' << r.f1 << ',' << (i == table.best ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace gesture
