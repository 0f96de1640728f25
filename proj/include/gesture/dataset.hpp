#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gesture/labels.hpp"
#include "gesture/pinch.hpp"
#include "gesture/tensor.hpp"

namespace gesture {

struct ObjectBox {
  BBox box;
  std::string category;

  bool operator==(const ObjectBox&) const = default;
};

struct SampleRecord {
  std::string id;
  std::filesystem::path frame;  // resolved against the manifest directory on read
  int width = 224;
  int height = 224;
  std::string gesture = "None";
  std::optional<BBox> hand_box;
  std::vector<BBox> fingertip_boxes;
  std::vector<ObjectBox> objects;
  std::vector<std::string> captions;
  std::optional<std::string> sequence_id;
  std::optional<int> frame_index;
  std::optional<ZoomAction> zoom;
  std::optional<Fingertips> pinch_tips;  // thumb and index centres, for the baseline

  // Throws DataError when a record invariant is broken.
  void validate(const LabelRegistry& registry) const;
  bool operator==(const SampleRecord& o) const;
};

// JSON-lines manifest; frame paths are written relative to the manifest.
void write_manifest(const std::filesystem::path& path, std::span<const SampleRecord> records);
std::vector<SampleRecord> read_manifest(const std::filesystem::path& path);
std::string record_to_json(const SampleRecord& record, const std::filesystem::path& base = {});
SampleRecord record_from_json(const std::string& line, const std::filesystem::path& base = {});

// Frames are (h, w, 3) in [0,1]; stored as .atn or binary PPM (P6, maxval 255).
Tensor load_frame(const std::filesystem::path& path);
void save_frame(const Tensor& frame, const std::filesystem::path& path);
Tensor read_ppm(const std::filesystem::path& path);
void write_ppm(const Tensor& frame, const std::filesystem::path& path);

enum class StimulusColor { Red, Green, Blue, Yellow, Cyan, Magenta, Skin };

std::array<float, 3> rgb(StimulusColor c);

struct Stimulus {
  StimulusColor color = StimulusColor::Red;
  int x = 0;  // top-left corner
  int y = 0;
  int size = 20;
};

struct SceneObject {
  std::string category;  // e.g. "mug"; rendered in the object colour
  StimulusColor color = StimulusColor::Cyan;
  BBox box;
};

struct SceneLayout {
  int width = 224;
  int height = 224;
  std::string gesture = "None";
  std::vector<Stimulus> stimuli;  // fingertips / gesture markers
  std::optional<BBox> hand;       // skin patch drawn under the stimuli
  std::vector<SceneObject> objects;
  double noise = 0.15;            // background is 0.45 +/- noise/2 per channel
};

// Deterministic frame plus exact ground truth. Red stimuli become fingertip
// boxes for Point and Drag. Throws ParameterError when stimuli overlap.
std::pair<Tensor, SampleRecord> generate_synthetic_scene(const SceneLayout& layout, std::uint64_t seed);

// Random layout for a gesture with stimulus sizes in [min_size, max_size].
struct SceneOptions {
  int width = 224;
  int height = 224;
  int min_size = 18;
  int max_size = 24;
  bool hand = true;
  bool objects = true;
};
SceneLayout random_layout(const std::string& gesture, const SceneOptions& options, std::mt19937_64& rng);

// Captions describing the objects of a scene, the first mentioning the hand.
std::vector<std::string> describe_scene(const SceneLayout& layout);

// Two blue fingertips whose separation changes by `rate` px per frame
// (positive for ZoomIn, negative for ZoomOut, zero for NoZoom). Frame t is
// labelled by comparing it with frame t - d.
struct PinchSequenceSpec {
  int width = 224;
  int height = 224;
  int frames = 10;
  std::size_t d = 5;
  double start_separation = 40.0;
  double rate = 3.0;
  double angle = 0.0;  // radians, orientation of the tip pair
  int tip_size = 12;
  std::string sequence_id = "seq";
};
std::vector<std::pair<Tensor, SampleRecord>> generate_pinch_sequence(const PinchSequenceSpec& spec,
                                                                     std::uint64_t seed);

struct SplitSpec {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SplitResult {
  std::vector<SampleRecord> train;
  std::vector<SampleRecord> val;
  std::vector<SampleRecord> test;
};

// Stratified by gesture over units (a sequence or a single record). Classes
// with fewer than three units go entirely to train.
SplitResult split(std::span<const SampleRecord> records, const SplitSpec& spec);

struct AugmentSpec {
  std::size_t copies = 10;
  double flip_probability = 0.5;
  double shift = 0.10;  // fraction of the extent
  double zoom = 0.10;
  double rotation_degrees = 5.0;
};

// Maps input coordinates to output coordinates: p' = A p + t.
struct Transform {
  enum class Kind { Identity, Flip, Shift, Zoom, Rotation } kind = Kind::Identity;
  std::array<double, 4> a{1.0, 0.0, 0.0, 1.0};
  std::array<double, 2> t{0.0, 0.0};

  static Transform flip(int width);
  static Transform shift(double dx, double dy);
  static Transform zoom(double scale, int width, int height);
  static Transform rotation(double degrees, int width, int height);

  std::array<double, 2> apply(double x, double y) const;
};

Transform sample_transform(const AugmentSpec& spec, int width, int height, std::mt19937_64& rng);

// Axis-aligned hull of the mapped corners, clipped; empty when less than 25%
// of the original area survives.
std::optional<BBox> transform_box(const BBox& box, const Transform& t, int width, int height);
Tensor transform_frame(const Tensor& frame, const Transform& t);
// Applies t to every box and point of the record; nullopt when an invariant breaks.
std::optional<SampleRecord> transform_record(const SampleRecord& record, const Transform& t,
                                             const LabelRegistry& registry);

// `copies` augmented versions, one random transform each, redrawn when the
// transformed record would be invalid.
std::vector<std::pair<Tensor, SampleRecord>> augment(const Tensor& frame, const SampleRecord& record,
                                                     const AugmentSpec& spec, const LabelRegistry& registry,
                                                     std::uint64_t seed);

struct AugmentedPair {
  Tensor current;
  Tensor past;
  SampleRecord current_record;
  SampleRecord past_record;
};
// Pinch pairs share one transform per copy.
std::vector<AugmentedPair> augment_pair(const Tensor& current, const SampleRecord& current_record,
                                        const Tensor& past, const SampleRecord& past_record,
                                        const AugmentSpec& spec, const LabelRegistry& registry, std::uint64_t seed);

}  // namespace gesture
