#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gesture/backbone.hpp"
#include "gesture/caption.hpp"
#include "gesture/classifier.hpp"
#include "gesture/dataset.hpp"
#include "gesture/filter_selection.hpp"
#include "gesture/pinch.hpp"

// Glue between manifests, the backbone and the trainable heads, shared by the
// command-line tool and the tests.
namespace gesture {

struct GenerateOptions {
  std::size_t scenes = 60;           // cycled over the six gestures
  std::size_t pinch_sequences = 0;   // extra zoom sequences
  int pinch_frames = 10;
  std::size_t d = 5;
  SceneOptions scene;
  std::string format = ".ppm";
  std::uint64_t seed = 0;
};

// Writes frames under dir/frames and returns the records (also written to
// dir/manifest.jsonl).
std::vector<SampleRecord> generate_dataset(const std::filesystem::path& dir, const GenerateOptions& options);

// Loads every frame of the records, with augmented copies appended when
// augment.copies > 0.
struct LoadedSample {
  Tensor frame;
  SampleRecord record;
};
std::vector<LoadedSample> load_samples(std::span<const SampleRecord> records);
std::vector<LoadedSample> with_augmentation(std::span<const LoadedSample> samples, const AugmentSpec& spec,
                                            std::uint64_t seed);

std::vector<LabeledFrame> fingertip_frames(std::span<const LoadedSample> samples, const std::string& gesture);

std::vector<ClassifierSample> classifier_samples(const Backbone& backbone, std::span<const LoadedSample> samples,
                                                 const LabelRegistry& registry);

// Pairs (t, t - d) of every sequence, warm-up frames compared with frame 0.
// With augment_copies > 0 each post-warm-up frame also pairs with t - (d - 1)
// and t - (d + 1), and every pair gains augment_copies transformed copies.
std::vector<PinchSample> pinch_samples(const Backbone& backbone, std::span<const LoadedSample> samples,
                                       std::size_t d, std::size_t augment_copies = 0, std::uint64_t seed = 0);

// One sample per caption of every record that has captions.
std::vector<CaptionSample> caption_samples(const Backbone& backbone, std::span<const LoadedSample> samples,
                                           const Vocabulary& vocab);

}  // namespace gesture
