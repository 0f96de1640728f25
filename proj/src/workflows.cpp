#include "gesture/workflows.hpp"

#include <algorithm>
#include <map>

#include "gesture/error.hpp"

namespace gesture {

std::vector<SampleRecord> generate_dataset(const std::filesystem::path& dir, const GenerateOptions& opt) {
  if (opt.format != ".ppm" && opt.format != ".atn") throw ParameterError("frame format must be .ppm or .atn");
  std::filesystem::create_directories(dir / "frames");
  static const char* kCycle[] = {"Point", "Drag", "Loupe", "Pinch", "Other", "None"};
  std::mt19937_64 rng(opt.seed);
  std::vector<SampleRecord> records;
  char name[32];
  for (std::size_t i = 0; i < opt.scenes; ++i) {
    const std::string gesture = kCycle[i % 6];
    const auto layout = random_layout(gesture, opt.scene, rng);
    auto [frame, rec] = generate_synthetic_scene(layout, opt.seed * 7919ULL + i);
    std::snprintf(name, sizeof name, "scene%05zu", i);
    rec.id = name;
    rec.frame = dir / "frames" / (rec.id + opt.format);
    save_frame(frame, rec.frame);
    records.push_back(std::move(rec));
  }
  std::uniform_real_distribution<double> rate_mag(3.0, 5.0);
  std::uniform_real_distribution<double> angle(-0.6, 0.6);
  for (std::size_t s = 0; s < opt.pinch_sequences; ++s) {
    PinchSequenceSpec spec;
    spec.width = opt.scene.width;
    spec.height = opt.scene.height;
    spec.frames = opt.pinch_frames;
    spec.d = opt.d;
    const int kind = static_cast<int>(s % 3);  // ZoomIn, ZoomOut, NoZoom
    const double scale = std::min(1.0, opt.scene.width / 224.0);
    const double mag = std::max(1.0, rate_mag(rng) * scale);
    spec.rate = kind == 0 ? mag : kind == 1 ? -mag : 0.0;
    spec.tip_size = std::max(4, opt.scene.width / 18);
    const double span = std::abs(spec.rate) * (spec.frames - 1);
    spec.start_separation = kind == 1 ? spec.tip_size + 4 + span : spec.tip_size + 4 + rate_mag(rng) * 2 * scale;
    spec.angle = angle(rng);
    std::snprintf(name, sizeof name, "pinch%04zu", s);
    spec.sequence_id = name;
    for (auto& [frame, rec] : generate_pinch_sequence(spec, opt.seed * 104729ULL + s)) {
      rec.frame = dir / "frames" / (rec.id + opt.format);
      save_frame(frame, rec.frame);
      records.push_back(std::move(rec));
    }
  }
  write_manifest(dir / "manifest.jsonl", records);
  return records;
}

std::vector<LoadedSample> load_samples(std::span<const SampleRecord> records) {
  std::vector<LoadedSample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({load_frame(r.frame), r});
  return out;
}

std::vector<LoadedSample> with_augmentation(std::span<const LoadedSample> samples, const AugmentSpec& spec,
                                            std::uint64_t seed) {
  const auto registry = LabelRegistry::standard();
  std::vector<LoadedSample> out(samples.begin(), samples.end());
  if (spec.copies == 0) return out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (auto& [f, r] : augment(samples[i].frame, samples[i].record, spec, registry, seed + i)) {
      out.push_back({std::move(f), std::move(r)});
    }
  }
  return out;
}

std::vector<LabeledFrame> fingertip_frames(std::span<const LoadedSample> samples, const std::string& gesture) {
  std::vector<LabeledFrame> out;
  for (const auto& s : samples) {
    if (s.record.gesture == gesture && !s.record.fingertip_boxes.empty()) {
      out.push_back({s.frame, s.record.fingertip_boxes});
    }
  }
  return out;
}

std::vector<ClassifierSample> classifier_samples(const Backbone& backbone, std::span<const LoadedSample> samples,
                                                 const LabelRegistry& registry) {
  std::vector<ClassifierSample> out;
  for (const auto& s : samples) {
    const auto label = registry.parse(s.record.gesture);
    const auto features = backbone.forward(s.frame, {}).features;
    out.push_back({nn::to_vec(features.values.data()), static_cast<std::size_t>(label)});
  }
  return out;
}

std::vector<PinchSample> pinch_samples(const Backbone& backbone, std::span<const LoadedSample> samples,
                                       std::size_t d, std::size_t augment_copies, std::uint64_t seed) {
  if (d == 0) throw ParameterError("d must be >= 1");
  std::map<std::string, std::vector<const LoadedSample*>> sequences;
  for (const auto& s : samples) {
    if (s.record.sequence_id && s.record.frame_index && s.record.zoom) sequences[*s.record.sequence_id].push_back(&s);
  }
  const auto registry = LabelRegistry::standard();
  const std::vector<std::string> layer{backbone.pooled_layer()};
  auto stack_of = [&](const Tensor& frame) { return backbone.forward(frame, layer).stack(layer.front()).maps; };
  std::vector<PinchSample> out;
  std::uint64_t pair_seed = seed;
  for (auto& [id, frames] : sequences) {
    std::sort(frames.begin(), frames.end(),
              [](const auto* a, const auto* b) { return *a->record.frame_index < *b->record.frame_index; });
    std::vector<Tensor> stacks;
    for (const auto* f : frames) stacks.push_back(stack_of(f->frame));
    for (std::size_t t = 0; t < frames.size(); ++t) {
      const std::size_t past = t >= d ? t - d : 0;
      const auto label = static_cast<std::size_t>(*frames[t]->record.zoom);
      out.push_back({stacks[t], stacks[past], label});
      if (augment_copies > 0) {
        // Past frame d - 1 and d + 1 back, keeping the label; skipped during warm-up.
        for (const std::size_t dd : {d - 1, d + 1}) {
          if (dd >= 1 && t >= d && t >= dd) out.push_back({stacks[t], stacks[t - dd], label});
        }
        AugmentSpec spec;
        spec.copies = augment_copies;
        for (auto& p : augment_pair(frames[t]->frame, frames[t]->record, frames[past]->frame, frames[past]->record,
                                    spec, registry, pair_seed++)) {
          out.push_back({stack_of(p.current), stack_of(p.past), label});
        }
      }
    }
  }
  return out;
}

std::vector<CaptionSample> caption_samples(const Backbone& backbone, std::span<const LoadedSample> samples,
                                           const Vocabulary& vocab) {
  std::vector<CaptionSample> out;
  for (const auto& s : samples) {
    if (s.record.captions.empty()) continue;
    const auto features = nn::to_vec(backbone.forward(s.frame, {}).features.values.data());
    for (const auto& c : s.record.captions) out.push_back({features, vocab.encode(c)});
  }
  return out;
}

}  // namespace gesture
