#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gesture/tensor.hpp"

namespace gesture {

// Filter responses of one layer for one frame: maps has dims (filters, h', w').
struct ActivationStack {
  std::string layer_name;
  Tensor maps;
  int source_width = 0;
  int source_height = 0;

  std::size_t filters() const { return maps.dim(0); }
  std::size_t height() const { return maps.dim(1); }
  std::size_t width() const { return maps.dim(2); }
  Tensor map(std::size_t filter) const { return maps.slice(filter); }
};

struct FeatureVector {
  Tensor values;  // 1-D
  std::size_t size() const { return values.size(); }
};

struct BackboneOutput {
  std::map<std::string, ActivationStack> stacks;
  FeatureVector features;

  const ActivationStack& stack(const std::string& layer) const;
};

FeatureVector global_average_pool(const ActivationStack& stack);

// Frame -> activation stacks and a pooled feature vector. Implementations must
// be deterministic and safe to call concurrently.
class Backbone {
 public:
  virtual ~Backbone() = default;

  virtual int input_width() const = 0;
  virtual int input_height() const = 0;
  virtual std::vector<std::string> layer_names() const = 0;
  // Name of the layer whose GAP is the feature vector.
  virtual std::string pooled_layer() const = 0;

  // frame: (h, w, 3) with values in [0,1]. Returns the requested stacks plus the
  // GAP of the pooled layer.
  virtual BackboneOutput forward(const Tensor& frame, std::span<const std::string> layers) const = 0;

  BackboneOutput forward(const Tensor& frame) const { return forward(frame, {}); }
};

// Linear colour detector planted in the first stage. Fires with kPlantedResponse
// on its exact colour and stays at zero for the other planted colours, white,
// black and greys.
struct PlantedDetector {
  std::string name;
  std::array<float, 3> rgb_weights;
  float bias;
  std::array<float, 3> stimulus;  // the colour it is tuned to
};

inline constexpr float kPlantedResponse = 0.5f;

std::vector<PlantedDetector> default_planted_detectors();

struct SyntheticBackboneConfig {
  std::uint64_t seed = 7;
  int width = 224;
  int height = 224;
  std::array<int, 3> filters{16, 32, 64};
  std::vector<PlantedDetector> planted = default_planted_detectors();
};

// Three 3x3 stride-2 ReLU conv stages ("stage1".."stage3") with seeded random
// filters followed by the planted detectors. In stage1 a planted filter reads the
// centre pixel's colour; in later stages it box-averages its own planted channel
// from the previous stage.
class SyntheticBackbone final : public Backbone {
 public:
  explicit SyntheticBackbone(SyntheticBackboneConfig config = {});

  int input_width() const override { return config_.width; }
  int input_height() const override { return config_.height; }
  std::vector<std::string> layer_names() const override { return {"stage1", "stage2", "stage3"}; }
  std::string pooled_layer() const override { return "stage3"; }
  BackboneOutput forward(const Tensor& frame, std::span<const std::string> layers) const override;
  using Backbone::forward;

  const SyntheticBackboneConfig& config() const { return config_; }
  // Channel index of planted detector j inside any stage.
  std::size_t planted_channel(std::size_t stage, std::size_t j) const;
  std::size_t planted_channel(const std::string& layer, std::size_t j) const;
  std::size_t filters(const std::string& layer) const;

 private:
  struct Stage {
    Tensor weights;  // (out, in, 3, 3)
    std::vector<float> bias;
  };

  SyntheticBackboneConfig config_;
  std::vector<Stage> stages_;
};

// Activation files written by an external exporter: JSON-lines manifest with
// {"image", "layer", "file", "dims"} per line; "kind":"pooled" marks a GAP vector.
struct ExportedEntry {
  std::string image;
  std::string layer;
  std::filesystem::path file;
  std::vector<std::size_t> dims;
  bool pooled = false;
};

std::vector<ExportedEntry> read_export_manifest(const std::filesystem::path& manifest);
// Loads one entry, checking the file's dims against the manifest.
Tensor load_exported(const ExportedEntry& entry);
ActivationStack exported_stack(const ExportedEntry& entry, int source_width, int source_height);

}  // namespace gesture
