#include "gesture/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"

#include "gesture/atn.hpp"
#include "gesture/error.hpp"

namespace gesture {

const ActivationStack& BackboneOutput::stack(const std::string& layer) const {
  auto it = stacks.find(layer);
  if (it == stacks.end()) throw ParameterError("layer '" + layer + "' was not requested");
  return it->second;
}

FeatureVector global_average_pool(const ActivationStack& stack) {
  const std::size_t f = stack.filters();
  const std::size_t n = stack.height() * stack.width();
  Tensor out({f});
  const auto data = stack.maps.data();
  for (std::size_t i = 0; i < f; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += data[i * n + k];
    out[i] = static_cast<float>(sum / static_cast<double>(n));
  }
  return FeatureVector{std::move(out)};
}

std::vector<PlantedDetector> default_planted_detectors() {
  return {
      {"red", {1.0f, -1.0f, -1.0f}, -0.5f, {1.0f, 0.0f, 0.0f}},
      {"green", {-1.0f, 1.0f, -1.0f}, -0.5f, {0.0f, 1.0f, 0.0f}},
      {"blue", {-1.0f, -1.0f, 1.0f}, -0.5f, {0.0f, 0.0f, 1.0f}},
      {"yellow", {1.0f, 1.0f, -2.0f}, -1.5f, {1.0f, 1.0f, 0.0f}},
  };
}

namespace {

// 3x3, stride 2, zero padding 1, ReLU. Accumulation order is fixed:
// output channel, input channel, kernel row, kernel column, then pixels.
Tensor conv_stride2_relu(const Tensor& in, const Tensor& weights, const std::vector<float>& bias) {
  const std::size_t cin = in.dim(0);
  const int h = static_cast<int>(in.dim(1));
  const int w = static_cast<int>(in.dim(2));
  const std::size_t cout = weights.dim(0);
  const int oh = (h + 1) / 2;
  const int ow = (w + 1) / 2;
  Tensor out({cout, static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)});
  const float* src = in.data().data();
  const float* wts = weights.data().data();
  float* dst = out.data().data();
  const std::size_t plane = static_cast<std::size_t>(oh) * ow;

  for (std::size_t o = 0; o < cout; ++o) {
    float* oplane = dst + o * plane;
    std::fill(oplane, oplane + plane, bias[o]);
    for (std::size_t c = 0; c < cin; ++c) {
      const float* iplane = src + c * static_cast<std::size_t>(h) * w;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const float wv = wts[((o * cin + c) * 3 + ky) * 3 + kx];
          if (wv == 0.0f) continue;
          // valid ox range: 0 <= 2*ox + kx - 1 < w
          const int ox_lo = kx == 0 ? 1 : 0;
          const int ox_hi = std::min(ow, (w - kx) / 2 + 1);
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = 2 * oy + ky - 1;
            if (iy < 0 || iy >= h) continue;
            const float* irow = iplane + static_cast<std::size_t>(iy) * w;
            float* orow = oplane + static_cast<std::size_t>(oy) * ow;
            for (int ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += wv * irow[2 * ox + kx - 1];
          }
        }
      }
    }
    for (std::size_t k = 0; k < plane; ++k) oplane[k] = std::max(oplane[k], 0.0f);
  }
  return out;
}

}  // namespace

SyntheticBackbone::SyntheticBackbone(SyntheticBackboneConfig config) : config_(std::move(config)) {
  if (config_.width < 8 || config_.height < 8) throw ParameterError("synthetic backbone extent must be >= 8");
  for (int f : config_.filters) {
    if (f < 0) throw ParameterError("filter counts must be non-negative");
  }
  const std::size_t planted = config_.planted.size();
  if (planted == 0 && std::any_of(config_.filters.begin(), config_.filters.end(), [](int f) { return f == 0; })) {
    throw ParameterError("every stage needs at least one filter");
  }
  std::mt19937_64 rng(config_.seed);
  std::size_t cin = 3;
  for (std::size_t s = 0; s < 3; ++s) {
    const std::size_t base = static_cast<std::size_t>(config_.filters[s]);
    const std::size_t cout = base + planted;
    Stage stage{Tensor({cout, cin, 3, 3}), std::vector<float>(cout, 0.0f)};
    const double limit = std::sqrt(6.0 / static_cast<double>(cin * 9));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t o = 0; o < base; ++o) {
      for (std::size_t k = 0; k < cin * 9; ++k) stage.weights[o * cin * 9 + k] = static_cast<float>(dist(rng));
    }
    for (std::size_t j = 0; j < planted; ++j) {
      const std::size_t o = base + j;
      if (s == 0) {
        auto& wt = stage.weights;
        for (std::size_t c = 0; c < 3; ++c) wt[((o * cin + c) * 3 + 1) * 3 + 1] = config_.planted[j].rgb_weights[c];
        stage.bias[o] = config_.planted[j].bias;
      } else {
        const std::size_t src = static_cast<std::size_t>(config_.filters[s - 1]) + j;
        for (std::size_t k = 0; k < 9; ++k) stage.weights[(o * cin + src) * 9 + k] = 1.0f / 9.0f;
      }
    }
    stages_.push_back(std::move(stage));
    cin = cout;
  }
}

std::size_t SyntheticBackbone::planted_channel(std::size_t stage, std::size_t j) const {
  if (stage >= 3 || j >= config_.planted.size()) throw ParameterError("planted channel out of range");
  return static_cast<std::size_t>(config_.filters[stage]) + j;
}

namespace {

std::size_t stage_index(const std::string& layer) {
  if (layer == "stage1") return 0;
  if (layer == "stage2") return 1;
  if (layer == "stage3") return 2;
  throw ParameterError("unknown layer '" + layer + "'");
}

}  // namespace

std::size_t SyntheticBackbone::planted_channel(const std::string& layer, std::size_t j) const {
  return planted_channel(stage_index(layer), j);
}

std::size_t SyntheticBackbone::filters(const std::string& layer) const {
  return stages_[stage_index(layer)].weights.dim(0);
}

BackboneOutput SyntheticBackbone::forward(const Tensor& frame, std::span<const std::string> layers) const {
  if (frame.ndim() != 3 || frame.dim(2) != 3 || static_cast<int>(frame.dim(0)) != config_.height ||
      static_cast<int>(frame.dim(1)) != config_.width) {
    throw ParameterError("frame extent mismatch: expected " + std::to_string(config_.height) + "x" +
                         std::to_string(config_.width) + "x3");
  }
  std::array<bool, 3> wanted{false, false, false};
  for (const auto& l : layers) wanted[stage_index(l)] = true;

  // HWC -> CHW
  const std::size_t h = frame.dim(0);
  const std::size_t w = frame.dim(1);
  Tensor x({3, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t xx = 0; xx < w; ++xx) {
      for (std::size_t c = 0; c < 3; ++c) x.at(c, y, xx) = frame.at(y, xx, c);
    }
  }

  BackboneOutput out;
  for (std::size_t s = 0; s < 3; ++s) {
    x = conv_stride2_relu(x, stages_[s].weights, stages_[s].bias);
    const std::string name = "stage" + std::to_string(s + 1);
    ActivationStack stack{name, x, config_.width, config_.height};
    if (s == 2) out.features = global_average_pool(stack);
    if (wanted[s]) out.stacks.emplace(name, std::move(stack));
  }
  return out;
}

std::vector<ExportedEntry> read_export_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw DataError("cannot open " + manifest.string());
  std::vector<ExportedEntry> entries;
  std::string line;
  int lineno = 0;
  const auto base = manifest.parent_path();
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ExportedEntry e;
      e.image = j.at("image").get<std::string>();
      e.layer = j.at("layer").get<std::string>();
      e.file = base / j.at("file").get<std::string>();
      e.dims = j.at("dims").get<std::vector<std::size_t>>();
      e.pooled = j.value("kind", std::string("stack")) == "pooled";
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw DataError(manifest.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return entries;
}

Tensor load_exported(const ExportedEntry& entry) {
  Tensor t = load_tensor(entry.file);
  if (t.dims() != entry.dims) throw DataError(entry.file.string() + ": dims disagree with manifest");
  return t;
}

ActivationStack exported_stack(const ExportedEntry& entry, int source_width, int source_height) {
  if (entry.pooled) throw DataError("entry for " + entry.image + " is a pooled vector, not a stack");
  Tensor t = load_exported(entry);
  if (t.ndim() != 3) throw DataError(entry.file.string() + ": activation stack must be (filters, h, w)");
  return ActivationStack{entry.layer, std::move(t), source_width, source_height};
}

}  // namespace gesture
