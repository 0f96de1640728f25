#include "gesture/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "gesture/atn.hpp"
#include "gesture/error.hpp"

namespace gesture {

using nlohmann::json;

namespace {

bool same_tips(const std::optional<Fingertips>& a, const std::optional<Fingertips>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return a->thumb_x == b->thumb_x && a->thumb_y == b->thumb_y && a->index_x == b->index_x && a->index_y == b->index_y;
}

void check_box(const BBox& b, int w, int h, const std::string& what, const std::string& id) {
  if (!b.valid() || !b.within(w, h)) throw DataError("record " + id + ": " + what + " box outside the frame or empty");
}

}  // namespace

void SampleRecord::validate(const LabelRegistry& registry) const {
  if (width <= 0 || height <= 0) throw DataError("record " + id + ": bad frame extent");
  const LabelId g = registry.parse(gesture);
  const bool tips_expected = g == labels::Point || g == labels::Drag;
  if (tips_expected == fingertip_boxes.empty()) {
    throw DataError("record " + id + ": fingertip boxes must be present exactly for Point and Drag");
  }
  if ((g == labels::Pinch) != zoom.has_value()) {
    throw DataError("record " + id + ": zoom label must be present exactly for Pinch");
  }
  if (hand_box) check_box(*hand_box, width, height, "hand", id);
  for (const auto& b : fingertip_boxes) check_box(b, width, height, "fingertip", id);
  for (const auto& o : objects) check_box(o.box, width, height, "object", id);
  if (captions.size() > 5) throw DataError("record " + id + ": more than 5 captions");
}

bool SampleRecord::operator==(const SampleRecord& o) const {
  return id == o.id && frame == o.frame && width == o.width && height == o.height && gesture == o.gesture &&
         hand_box == o.hand_box && fingertip_boxes == o.fingertip_boxes && objects == o.objects &&
         captions == o.captions && sequence_id == o.sequence_id && frame_index == o.frame_index && zoom == o.zoom &&
         same_tips(pinch_tips, o.pinch_tips);
}

namespace {

json box_json(const BBox& b) { return json::array({b.x0, b.y0, b.x1, b.y1}); }

BBox box_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw DataError("box must be [x0, y0, x1, y1]");
  return BBox::make(j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>());
}

}  // namespace

std::string record_to_json(const SampleRecord& r, const std::filesystem::path& base) {
  json j;
  j["id"] = r.id;
  const auto frame = base.empty() || r.frame.empty() ? r.frame : r.frame.lexically_relative(base);
  j["frame"] = frame.generic_string();
  j["width"] = r.width;
  j["height"] = r.height;
  j["gesture"] = r.gesture;
  if (r.hand_box) j["hand_box"] = box_json(*r.hand_box);
  j["fingertip_boxes"] = json::array();
  for (const auto& b : r.fingertip_boxes) j["fingertip_boxes"].push_back(box_json(b));
  j["objects"] = json::array();
  for (const auto& o : r.objects) j["objects"].push_back({{"box", box_json(o.box)}, {"category", o.category}});
  j["captions"] = r.captions;
  if (r.sequence_id) j["sequence_id"] = *r.sequence_id;
  if (r.frame_index) j["frame_index"] = *r.frame_index;
  if (r.zoom) j["zoom"] = std::string(to_string(*r.zoom));
  if (r.pinch_tips) {
    const auto& t = *r.pinch_tips;
    j["pinch_tips"] = json::array({t.thumb_x, t.thumb_y, t.index_x, t.index_y});
  }
  return j.dump();
}

SampleRecord record_from_json(const std::string& line, const std::filesystem::path& base) {
  try {
    const auto j = json::parse(line);
    SampleRecord r;
    r.id = j.at("id").get<std::string>();
    const std::filesystem::path frame = j.at("frame").get<std::string>();
    r.frame = base.empty() || frame.empty() ? frame : base / frame;
    r.width = j.value("width", 224);
    r.height = j.value("height", 224);
    r.gesture = j.at("gesture").get<std::string>();
    if (j.contains("hand_box")) r.hand_box = box_from(j["hand_box"]);
    for (const auto& b : j.value("fingertip_boxes", json::array())) r.fingertip_boxes.push_back(box_from(b));
    for (const auto& o : j.value("objects", json::array())) {
      r.objects.push_back({box_from(o.at("box")), o.at("category").get<std::string>()});
    }
    r.captions = j.value("captions", std::vector<std::string>{});
    if (j.contains("sequence_id")) r.sequence_id = j["sequence_id"].get<std::string>();
    if (j.contains("frame_index")) r.frame_index = j["frame_index"].get<int>();
    if (j.contains("zoom")) r.zoom = parse_zoom_action(j["zoom"].get<std::string>());
    if (j.contains("pinch_tips")) {
      const auto v = j["pinch_tips"].get<std::vector<double>>();
      if (v.size() != 4) throw DataError("pinch_tips must hold 4 numbers");
      r.pinch_tips = Fingertips{v[0], v[1], v[2], v[3]};
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed record: ") + e.what());
  } catch (const ParameterError& e) {
    throw DataError(std::string("malformed record: ") + e.what());
  }
}

void write_manifest(const std::filesystem::path& path, std::span<const SampleRecord> records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  const auto base = path.parent_path();
  for (const auto& r : records) out << record_to_json(r, base) << '\n';
}

std::vector<SampleRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<SampleRecord> out;
  std::string line;
  int lineno = 0;
  const auto base = path.parent_path();
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(line, base));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

Tensor read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  auto token = [&]() {
    std::string t;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (!std::isspace(static_cast<unsigned char>(c))) {
        t.push_back(c);
        break;
      }
    }
    while (in.get(c) && !std::isspace(static_cast<unsigned char>(c))) t.push_back(c);
    return t;
  };
  if (token() != "P6") throw DataError(path.string() + ": not a binary PPM (P6)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::logic_error&) {
    throw DataError(path.string() + ": malformed PPM header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) throw DataError(path.string() + ": only 8-bit PPM is supported");
  const std::size_t n = static_cast<std::size_t>(w) * h * 3;
  std::vector<unsigned char> bytes(n);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw DataError(path.string() + ": truncated PPM payload");
  Tensor t({static_cast<std::size_t>(h), static_cast<std::size_t>(w), 3});
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<float>(bytes[i]) / 255.0f;
  return t;
}

void write_ppm(const Tensor& frame, const std::filesystem::path& path) {
  if (frame.ndim() != 3 || frame.dim(2) != 3) throw ParameterError("frame must be (h, w, 3)");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P6\n" << frame.dim(1) << ' ' << frame.dim(0) << "\n255\n";
  std::vector<unsigned char> bytes(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(frame[i], 0.0f, 1.0f) * 255.0f));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Tensor load_frame(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".ppm") return read_ppm(path);
  if (ext == ".atn") {
    Tensor t = load_tensor(path);
    if (t.ndim() != 3 || t.dim(2) != 3) throw DataError(path.string() + ": frame must be (h, w, 3)");
    return t;
  }
  throw DataError(path.string() + ": unsupported frame format (expected .ppm or .atn)");
}

void save_frame(const Tensor& frame, const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".ppm") return write_ppm(frame, path);
  if (ext == ".atn") return save_tensor(frame, path);
  throw ParameterError(path.string() + ": unsupported frame format (expected .ppm or .atn)");
}

std::array<float, 3> rgb(StimulusColor c) {
  switch (c) {
    case StimulusColor::Red: return {1.0f, 0.0f, 0.0f};
    case StimulusColor::Green: return {0.0f, 1.0f, 0.0f};
    case StimulusColor::Blue: return {0.0f, 0.0f, 1.0f};
    case StimulusColor::Yellow: return {1.0f, 1.0f, 0.0f};
    case StimulusColor::Cyan: return {0.0f, 1.0f, 1.0f};
    case StimulusColor::Magenta: return {1.0f, 0.0f, 1.0f};
    case StimulusColor::Skin: return {0.9f, 0.7f, 0.6f};
  }
  return {0.0f, 0.0f, 0.0f};
}

namespace {

constexpr float kBackground = 0.45f;

std::string color_name(StimulusColor c) {
  switch (c) {
    case StimulusColor::Red: return "red";
    case StimulusColor::Green: return "green";
    case StimulusColor::Blue: return "blue";
    case StimulusColor::Yellow: return "yellow";
    case StimulusColor::Cyan: return "cyan";
    case StimulusColor::Magenta: return "magenta";
    case StimulusColor::Skin: return "skin";
  }
  return "";
}

void fill_box(Tensor& frame, const BBox& b, std::array<float, 3> color) {
  const int h = static_cast<int>(frame.dim(0));
  const int w = static_cast<int>(frame.dim(1));
  for (int y = std::max(0, b.y0); y < std::min(h, b.y1); ++y) {
    for (int x = std::max(0, b.x0); x < std::min(w, b.x1); ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        frame.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) = color[c];
      }
    }
  }
}

BBox stimulus_box(const Stimulus& s) { return BBox{s.x, s.y, s.x + s.size, s.y + s.size}; }

bool overlaps(const BBox& a, const BBox& b) {
  return std::max(a.x0, b.x0) < std::min(a.x1, b.x1) && std::max(a.y0, b.y0) < std::min(a.y1, b.y1);
}

BBox hull(const BBox& a, const BBox& b) {
  return BBox{std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1), std::max(a.y1, b.y1)};
}

}  // namespace

std::pair<Tensor, SampleRecord> generate_synthetic_scene(const SceneLayout& layout, std::uint64_t seed) {
  if (layout.width < 8 || layout.height < 8) throw ParameterError("scene extent must be >= 8");
  const auto registry = LabelRegistry::standard();
  const LabelId g = registry.parse(layout.gesture);
  for (std::size_t i = 0; i < layout.stimuli.size(); ++i) {
    const auto bi = stimulus_box(layout.stimuli[i]);
    if (layout.stimuli[i].size <= 0 || !bi.within(layout.width, layout.height)) {
      throw ParameterError("stimulus outside the frame");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (overlaps(bi, stimulus_box(layout.stimuli[j]))) throw ParameterError("overlapping stimuli");
    }
    for (const auto& o : layout.objects) {
      if (overlaps(bi, o.box)) throw ParameterError("stimulus overlaps an object");
    }
  }

  const auto h = static_cast<std::size_t>(layout.height);
  const auto w = static_cast<std::size_t>(layout.width);
  Tensor frame({h, w, 3});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-layout.noise / 2.0, layout.noise / 2.0);
  for (auto& v : frame.data()) v = static_cast<float>(kBackground + noise(rng));

  SampleRecord rec;
  rec.width = layout.width;
  rec.height = layout.height;
  rec.gesture = registry.name(g);
  for (const auto& o : layout.objects) {
    if (!o.box.valid() || !o.box.within(layout.width, layout.height)) throw ParameterError("object outside the frame");
    fill_box(frame, o.box, rgb(o.color));
    rec.objects.push_back({o.box, o.category});
  }
  std::optional<BBox> hand = layout.hand;
  if (hand) fill_box(frame, *hand, rgb(StimulusColor::Skin));
  for (const auto& s : layout.stimuli) {
    const auto b = stimulus_box(s);
    fill_box(frame, b, rgb(s.color));
    if (hand) hand = hull(*hand, b);
    if ((g == labels::Point || g == labels::Drag) && s.color == StimulusColor::Red) rec.fingertip_boxes.push_back(b);
  }
  if (hand) rec.hand_box = hand;
  if (g == labels::Loupe) rec.captions = describe_scene(layout);
  if (g == labels::Pinch) {
    // A scene-level pinch frame without history compares with itself.
    rec.zoom = ZoomAction::NoZoom;
  }
  return {std::move(frame), std::move(rec)};
}

namespace {

struct ObjectKind {
  const char* category;
  StimulusColor color;
};

constexpr ObjectKind kObjects[] = {
    {"mug", StimulusColor::Cyan},     {"book", StimulusColor::Magenta}, {"bottle", StimulusColor::Cyan},
    {"phone", StimulusColor::Magenta}, {"lamp", StimulusColor::Cyan},   {"box", StimulusColor::Magenta},
};

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

}  // namespace

SceneLayout random_layout(const std::string& gesture, const SceneOptions& opt, std::mt19937_64& rng) {
  const auto registry = LabelRegistry::standard();
  const LabelId g = registry.parse(gesture);
  if (opt.min_size < 1 || opt.max_size < opt.min_size) throw ParameterError("bad stimulus size range");
  SceneLayout layout;
  layout.width = opt.width;
  layout.height = opt.height;
  layout.gesture = registry.name(g);

  std::size_t count = 0;
  StimulusColor color = StimulusColor::Red;
  switch (g) {
    case labels::Point: count = 1; break;
    case labels::Drag: count = 2; break;
    case labels::Loupe: count = 1; color = StimulusColor::Green; break;
    case labels::Pinch: count = 2; color = StimulusColor::Blue; break;
    case labels::Other: count = 1; color = StimulusColor::Yellow; break;
    default: count = 0; break;
  }

  std::vector<BBox> taken;
  auto place = [&](int size, int margin) -> std::optional<BBox> {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const int x = uniform_int(rng, margin, opt.width - size - margin);
      const int y = uniform_int(rng, margin, opt.height - size - margin);
      const BBox b{x, y, x + size, y + size};
      const BBox padded{x - 4, y - 4, x + size + 4, y + size + 4};
      if (std::none_of(taken.begin(), taken.end(), [&](const BBox& t) { return overlaps(padded, t); })) {
        taken.push_back(b);
        return b;
      }
    }
    return std::nullopt;
  };

  const int margin = std::max(2, opt.width / 28);
  for (std::size_t i = 0; i < count; ++i) {
    const int size = uniform_int(rng, opt.min_size, opt.max_size);
    const auto b = place(size, margin);
    if (!b) throw ParameterError("could not place stimuli without overlap");
    layout.stimuli.push_back({color, b->x0, b->y0, size});
  }
  if (opt.objects && opt.width >= 64) {
    const int n_obj = g == labels::Loupe ? 1 + uniform_int(rng, 0, 1) : uniform_int(rng, 0, 1);
    for (int i = 0; i < n_obj; ++i) {
      const auto& kind = kObjects[uniform_int(rng, 0, static_cast<int>(std::size(kObjects)) - 1)];
      const int size = uniform_int(rng, opt.width / 8, opt.width / 5);
      if (const auto b = place(size, margin)) layout.objects.push_back({kind.category, kind.color, *b});
    }
  }
  if (opt.hand && count > 0 && g != labels::Pinch) {
    // Palm below the first stimulus, clipped to the frame; it may cover
    // nothing but skin-coloured pixels, which no planted filter responds to.
    const auto& s = layout.stimuli.front();
    BBox palm{std::max(0, s.x - s.size / 2), std::min(opt.height - 1, s.y + s.size),
              std::min(opt.width, s.x + s.size + s.size / 2), std::min(opt.height, s.y + 3 * s.size)};
    bool clear = palm.valid();
    for (const auto& t : taken) {
      if (clear && overlaps(palm, t)) clear = false;
    }
    if (clear) layout.hand = palm;
  }
  return layout;
}

std::vector<std::string> describe_scene(const SceneLayout& layout) {
  std::vector<std::string> out;
  if (layout.objects.empty()) {
    out.push_back("A hand over an empty desk");
    out.push_back("An empty desk");
    return out;
  }
  const auto& o = layout.objects.front();
  const std::string first = "a " + color_name(o.color) + " " + o.category;
  out.push_back("A hand is pointing to " + first + " on a desk");
  out.push_back("A finger pointing at " + first);
  std::string cap = first + " on a desk";
  cap[0] = 'A';
  out.push_back(cap);
  if (layout.objects.size() > 1) {
    const auto& p = layout.objects[1];
    std::string both = first + " next to a " + color_name(p.color) + " " + p.category;
    both[0] = 'A';
    out.push_back(both);
  }
  out.push_back("A hand and " + first);
  return out;
}

std::vector<std::pair<Tensor, SampleRecord>> generate_pinch_sequence(const PinchSequenceSpec& spec,
                                                                     std::uint64_t seed) {
  if (spec.frames < 1 || spec.d < 1 || spec.tip_size < 1) throw ParameterError("bad pinch sequence spec");
  std::mt19937_64 rng(seed);
  const double max_sep = std::max(spec.start_separation, spec.start_separation + spec.rate * (spec.frames - 1));
  const double min_sep = std::min(spec.start_separation, spec.start_separation + spec.rate * (spec.frames - 1));
  if (min_sep < spec.tip_size + 2) throw ParameterError("pinch tips would overlap");
  const double reach = max_sep / 2.0 + spec.tip_size;
  if (2 * reach + 4 > std::min(spec.width, spec.height)) throw ParameterError("pinch sequence does not fit the frame");
  const double cx = std::uniform_real_distribution<double>(reach + 2, spec.width - reach - 2)(rng);
  const double cy = std::uniform_real_distribution<double>(reach + 2, spec.height - reach - 2)(rng);
  const double ux = std::cos(spec.angle);
  const double uy = std::sin(spec.angle);

  std::vector<std::pair<Tensor, SampleRecord>> out;
  std::vector<double> separations;
  for (int t = 0; t < spec.frames; ++t) {
    const double sep = spec.start_separation + spec.rate * t;
    separations.push_back(sep);
    Fingertips tips{cx - ux * sep / 2, cy - uy * sep / 2, cx + ux * sep / 2, cy + uy * sep / 2};
    SceneLayout layout;
    layout.width = spec.width;
    layout.height = spec.height;
    layout.gesture = "Pinch";
    const int half = spec.tip_size / 2;
    layout.stimuli.push_back({StimulusColor::Blue, static_cast<int>(std::lround(tips.thumb_x)) - half,
                              static_cast<int>(std::lround(tips.thumb_y)) - half, spec.tip_size});
    layout.stimuli.push_back({StimulusColor::Blue, static_cast<int>(std::lround(tips.index_x)) - half,
                              static_cast<int>(std::lround(tips.index_y)) - half, spec.tip_size});
    auto [frame, rec] = generate_synthetic_scene(layout, seed * 1000003ULL + static_cast<std::uint64_t>(t));
    rec.id = spec.sequence_id + "_" + std::to_string(t);
    rec.sequence_id = spec.sequence_id;
    rec.frame_index = t;
    rec.pinch_tips = tips;
    const std::size_t past = static_cast<std::size_t>(t) >= spec.d ? static_cast<std::size_t>(t) - spec.d : 0;
    rec.zoom = baseline_from_distances(separations[past], sep);
    out.emplace_back(std::move(frame), std::move(rec));
  }
  return out;
}

void SplitSpec::validate() const {
  if (train < 0 || val < 0 || test < 0 || std::abs(train + val + test - 1.0) > 1e-9) {
    throw ParameterError("split fractions must be non-negative and sum to 1");
  }
}

SplitResult split(std::span<const SampleRecord> records, const SplitSpec& spec) {
  spec.validate();
  if (records.empty()) throw DataError("no records to split");
  // Units keyed by sequence id; standalone records are their own unit.
  std::vector<std::vector<std::size_t>> units;
  std::map<std::string, std::size_t> by_sequence;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].sequence_id) {
      auto [it, fresh] = by_sequence.emplace(*records[i].sequence_id, units.size());
      if (fresh) units.emplace_back();
      units[it->second].push_back(i);
    } else {
      units.push_back({i});
    }
  }
  std::vector<std::string> class_order;
  std::map<std::string, std::vector<std::size_t>> per_class;
  for (std::size_t u = 0; u < units.size(); ++u) {
    const auto& g = records[units[u].front()].gesture;
    if (!per_class.count(g)) class_order.push_back(g);
    per_class[g].push_back(u);
  }

  std::mt19937_64 rng(spec.seed);
  std::vector<int> bucket(records.size(), 0);  // 0 train, 1 val, 2 test
  for (const auto& g : class_order) {
    auto& us = per_class[g];
    std::shuffle(us.begin(), us.end(), rng);
    const auto n = static_cast<long>(us.size());
    long n_val = 0;
    long n_test = 0;
    if (n < 3) {
      warn("class " + g + " has " + std::to_string(n) + " unit(s); all go to train");
    } else {
      n_val = std::lround(static_cast<double>(n) * spec.val);
      n_test = std::lround(static_cast<double>(n) * spec.test);
      if (spec.val > 0) n_val = std::max(n_val, 1L);
      if (spec.test > 0) n_test = std::max(n_test, 1L);
      while (n - n_val - n_test < 1) (n_val >= n_test ? n_val : n_test) -= 1;
    }
    for (long k = 0; k < n; ++k) {
      const int b = k < n_val ? 1 : k < n_val + n_test ? 2 : 0;
      for (auto i : units[us[static_cast<std::size_t>(k)]]) bucket[i] = b;
    }
  }
  SplitResult out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    (bucket[i] == 0 ? out.train : bucket[i] == 1 ? out.val : out.test).push_back(records[i]);
  }
  return out;
}

Transform Transform::flip(int width) {
  Transform t;
  t.kind = Kind::Flip;
  t.a = {-1.0, 0.0, 0.0, 1.0};
  t.t = {static_cast<double>(width), 0.0};
  return t;
}

Transform Transform::shift(double dx, double dy) {
  Transform t;
  t.kind = Kind::Shift;
  t.t = {dx, dy};
  return t;
}

Transform Transform::zoom(double scale, int width, int height) {
  if (!(scale > 0.0)) throw ParameterError("zoom scale must be positive");
  Transform t;
  t.kind = Kind::Zoom;
  t.a = {scale, 0.0, 0.0, scale};
  const double cx = width / 2.0;
  const double cy = height / 2.0;
  t.t = {cx - scale * cx, cy - scale * cy};
  return t;
}

Transform Transform::rotation(double degrees, int width, int height) {
  Transform t;
  t.kind = Kind::Rotation;
  const double r = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(r);
  const double s = std::sin(r);
  t.a = {c, -s, s, c};
  const double cx = width / 2.0;
  const double cy = height / 2.0;
  t.t = {cx - (c * cx - s * cy), cy - (s * cx + c * cy)};
  return t;
}

std::array<double, 2> Transform::apply(double x, double y) const {
  return {a[0] * x + a[1] * y + t[0], a[2] * x + a[3] * y + t[1]};
}

Transform sample_transform(const AugmentSpec& spec, int width, int height, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < spec.flip_probability) return Transform::flip(width);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
    case 0: {
      const double dx = sym(rng) * spec.shift * width;
      const double dy = sym(rng) * spec.shift * height;
      return Transform::shift(dx, dy);
    }
    case 1: return Transform::zoom(1.0 + sym(rng) * spec.zoom, width, height);
    default: return Transform::rotation(sym(rng) * spec.rotation_degrees, width, height);
  }
}

namespace {

double snap_floor(double v) { return std::floor(v + 1e-9); }
double snap_ceil(double v) { return std::ceil(v - 1e-9); }

}  // namespace

std::optional<BBox> transform_box(const BBox& box, const Transform& t, int width, int height) {
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  for (auto [x, y] : {std::pair{box.x0, box.y0}, {box.x1, box.y0}, {box.x0, box.y1}, {box.x1, box.y1}}) {
    const auto p = t.apply(x, y);
    x0 = std::min(x0, p[0]);
    y0 = std::min(y0, p[1]);
    x1 = std::max(x1, p[0]);
    y1 = std::max(y1, p[1]);
  }
  BBox out{static_cast<int>(std::max(0.0, snap_floor(x0))), static_cast<int>(std::max(0.0, snap_floor(y0))),
           static_cast<int>(std::min<double>(width, snap_ceil(x1))),
           static_cast<int>(std::min<double>(height, snap_ceil(y1)))};
  if (!out.valid()) return std::nullopt;
  if (static_cast<double>(out.area()) < 0.25 * static_cast<double>(box.area())) return std::nullopt;
  return out;
}

Tensor transform_frame(const Tensor& frame, const Transform& t) {
  if (frame.ndim() != 3 || frame.dim(2) != 3) throw ParameterError("frame must be (h, w, 3)");
  const auto h = static_cast<long>(frame.dim(0));
  const auto w = static_cast<long>(frame.dim(1));
  const double det = t.a[0] * t.a[3] - t.a[1] * t.a[2];
  if (std::abs(det) < 1e-12) throw ParameterError("singular transform");
  const std::array<double, 4> inv{t.a[3] / det, -t.a[1] / det, -t.a[2] / det, t.a[0] / det};
  Tensor out(frame.dims(), kBackground);
  auto pixel = [&](long y, long x, std::size_t c) -> double {
    if (x < 0 || y < 0 || x >= w || y >= h) return kBackground;
    return frame.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c);
  };
  for (long oy = 0; oy < h; ++oy) {
    for (long ox = 0; ox < w; ++ox) {
      const double px = ox + 0.5 - t.t[0];
      const double py = oy + 0.5 - t.t[1];
      double sx = inv[0] * px + inv[1] * py - 0.5;
      double sy = inv[2] * px + inv[3] * py - 0.5;
      if (std::abs(sx - std::round(sx)) < 1e-9) sx = std::round(sx);
      if (std::abs(sy - std::round(sy)) < 1e-9) sy = std::round(sy);
      const long x0 = static_cast<long>(std::floor(sx));
      const long y0 = static_cast<long>(std::floor(sy));
      const double fx = sx - x0;
      const double fy = sy - y0;
      for (std::size_t c = 0; c < 3; ++c) {
        double v = (1 - fx) * (1 - fy) * pixel(y0, x0, c);
        if (fx > 0) v += fx * (1 - fy) * pixel(y0, x0 + 1, c);
        if (fy > 0) v += (1 - fx) * fy * pixel(y0 + 1, x0, c);
        if (fx > 0 && fy > 0) v += fx * fy * pixel(y0 + 1, x0 + 1, c);
        out.at(static_cast<std::size_t>(oy), static_cast<std::size_t>(ox), c) = static_cast<float>(v);
      }
    }
  }
  return out;
}

std::optional<SampleRecord> transform_record(const SampleRecord& record, const Transform& t,
                                             const LabelRegistry& registry) {
  SampleRecord r = record;
  if (record.hand_box) r.hand_box = transform_box(*record.hand_box, t, r.width, r.height);
  r.fingertip_boxes.clear();
  for (const auto& b : record.fingertip_boxes) {
    const auto m = transform_box(b, t, r.width, r.height);
    if (!m) return std::nullopt;
    r.fingertip_boxes.push_back(*m);
  }
  r.objects.clear();
  for (const auto& o : record.objects) {
    if (const auto m = transform_box(o.box, t, r.width, r.height)) r.objects.push_back({*m, o.category});
  }
  if (record.pinch_tips) {
    const auto& p = *record.pinch_tips;
    const auto a = t.apply(p.thumb_x, p.thumb_y);
    const auto b = t.apply(p.index_x, p.index_y);
    r.pinch_tips = Fingertips{a[0], a[1], b[0], b[1]};
  }
  try {
    r.validate(registry);
  } catch (const DataError&) {
    return std::nullopt;
  }
  return r;
}

namespace {

constexpr int kMaxRedraws = 50;

}  // namespace

std::vector<std::pair<Tensor, SampleRecord>> augment(const Tensor& frame, const SampleRecord& record,
                                                     const AugmentSpec& spec, const LabelRegistry& registry,
                                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::pair<Tensor, SampleRecord>> out;
  for (std::size_t i = 0; i < spec.copies; ++i) {
    std::optional<SampleRecord> rec;
    Transform t;
    for (int attempt = 0; attempt < kMaxRedraws && !rec; ++attempt) {
      t = sample_transform(spec, record.width, record.height, rng);
      rec = transform_record(record, t, registry);
    }
    if (!rec) {
      // A horizontal flip keeps every box whole.
      t = Transform::flip(record.width);
      rec = transform_record(record, t, registry);
      if (!rec) throw DataError("record " + record.id + " cannot be augmented");
    }
    rec->id = record.id + "_aug" + std::to_string(i);
    out.emplace_back(transform_frame(frame, t), std::move(*rec));
  }
  return out;
}

std::vector<AugmentedPair> augment_pair(const Tensor& current, const SampleRecord& current_record,
                                        const Tensor& past, const SampleRecord& past_record,
                                        const AugmentSpec& spec, const LabelRegistry& registry, std::uint64_t seed) {
  if (current.dims() != past.dims()) throw ParameterError("pinch pair frames differ in shape");
  std::mt19937_64 rng(seed);
  std::vector<AugmentedPair> out;
  for (std::size_t i = 0; i < spec.copies; ++i) {
    std::optional<SampleRecord> a;
    std::optional<SampleRecord> b;
    Transform t;
    for (int attempt = 0; attempt < kMaxRedraws && !(a && b); ++attempt) {
      t = sample_transform(spec, current_record.width, current_record.height, rng);
      a = transform_record(current_record, t, registry);
      b = transform_record(past_record, t, registry);
    }
    if (!(a && b)) {
      t = Transform::flip(current_record.width);
      a = transform_record(current_record, t, registry);
      b = transform_record(past_record, t, registry);
      if (!(a && b)) throw DataError("pinch pair " + current_record.id + " cannot be augmented");
    }
    a->id = current_record.id + "_aug" + std::to_string(i);
    b->id = past_record.id + "_aug" + std::to_string(i);
    out.push_back({transform_frame(current, t), transform_frame(past, t), std::move(*a), std::move(*b)});
  }
  return out;
}

}  // namespace gesture
