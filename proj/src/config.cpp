#include "gesture/config.hpp"

#include <fstream>
#include <sstream>

#include "gesture/error.hpp"

namespace gesture {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T v{};
  if (!(in >> v) || !in.eof()) throw ParameterError("config: " + key + " expects a number, got '" + value + "'");
  return v;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  if (!value.empty() && value[0] == '-') throw ParameterError("config: " + key + " must be non-negative");
  return parse_number<std::size_t>(key, value);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw ParameterError("config: " + key + " expects true/false, got '" + value + "'");
}

std::filesystem::path resolve(const std::string& value, const std::filesystem::path& base) {
  std::filesystem::path p = value;
  return p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace

const std::vector<std::string>& Settings::keys() {
  static const std::vector<std::string> k{
      "backbone.seed", "backbone.width", "backbone.height", "backbone.filters", "fs.layer", "fs.top_n",
      "fs.alpha", "fs.beta", "fs.kernel", "fs.min_area", "engine.k", "engine.d", "engine.max_caption_len",
      "engine.caption_every_n", "weights.classifier", "weights.pinch", "weights.caption", "fset.point",
      "fset.drag", "train.max_epochs", "train.batch_size", "train.patience", "train.rho", "train.epsilon",
      "train.learning_rate", "train.augment", "train.seed"};
  return k;
}

void Settings::set(const std::string& key, const std::string& value, const std::filesystem::path& base) {
  if (key == "backbone.seed") {
    backbone.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "backbone.width") {
    backbone.width = parse_number<int>(key, value);
  } else if (key == "backbone.height") {
    backbone.height = parse_number<int>(key, value);
  } else if (key == "backbone.filters") {
    std::istringstream in(value);
    std::string part;
    std::vector<int> f;
    while (std::getline(in, part, ',')) f.push_back(parse_number<int>(key, trim(part)));
    if (f.size() != 3) throw ParameterError("config: backbone.filters needs three comma-separated counts");
    backbone.filters = {f[0], f[1], f[2]};
  } else if (key == "fs.layer") {
    fs.layer = value;
  } else if (key == "fs.top_n") {
    fs.top_n = parse_count(key, value);
    fs.alpha.reset();
  } else if (key == "fs.alpha") {
    fs.alpha = parse_number<double>(key, value);
    fs.top_n.reset();
  } else if (key == "fs.beta") {
    fs.beta = parse_number<double>(key, value);
  } else if (key == "fs.kernel") {
    fs.kernel = parse_number<int>(key, value);
  } else if (key == "fs.min_area") {
    fs.min_area = parse_number<long long>(key, value);
  } else if (key == "engine.k") {
    k = parse_number<int>(key, value);
  } else if (key == "engine.d") {
    d = parse_count(key, value);
  } else if (key == "engine.max_caption_len") {
    max_caption_len = parse_count(key, value);
  } else if (key == "engine.caption_every_n") {
    caption_every_n = parse_count(key, value);
  } else if (key == "weights.classifier") {
    classifier = resolve(value, base);
  } else if (key == "weights.pinch") {
    pinch = resolve(value, base);
  } else if (key == "weights.caption") {
    caption = resolve(value, base);
  } else if (key == "fset.point") {
    fset_point = resolve(value, base);
  } else if (key == "fset.drag") {
    fset_drag = resolve(value, base);
  } else if (key == "train.max_epochs") {
    train.max_epochs = parse_count(key, value);
  } else if (key == "train.batch_size") {
    train.batch_size = parse_count(key, value);
  } else if (key == "train.patience") {
    train.patience = parse_count(key, value);
  } else if (key == "train.rho") {
    train.rho = parse_number<double>(key, value);
  } else if (key == "train.epsilon") {
    train.epsilon = parse_number<double>(key, value);
  } else if (key == "train.learning_rate") {
    train.learning_rate = parse_number<double>(key, value);
  } else if (key == "train.augment") {
    train.augment = parse_bool(key, value);
  } else if (key == "train.seed") {
    train.seed = parse_number<std::uint64_t>(key, value);
  } else {
    throw ParameterError("config: unknown key '" + key + "'");
  }
}

Settings parse_settings(const std::string& text, const std::filesystem::path& base) {
  Settings s;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParameterError("config line " + std::to_string(lineno) + ": expected key = value");
    s.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), base);
  }
  return s;
}

Settings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_settings(buf.str(), path.parent_path());
}

std::shared_ptr<const Backbone> make_backbone(const Settings& s) {
  return std::make_shared<SyntheticBackbone>(s.backbone);
}

SessionConfig make_session_config(const Settings& s) {
  if (s.classifier.empty()) throw ParameterError("config: weights.classifier is required");
  SessionConfig c;
  c.classifier = classifier_from_bundle(load_bundle(s.classifier));
  if (!s.fset_point.empty()) c.filter_sets[labels::Point] = load_filter_set(s.fset_point);
  if (!s.fset_drag.empty()) c.filter_sets[labels::Drag] = load_filter_set(s.fset_drag);
  if (!s.pinch.empty()) c.pinch = pinch_from_bundle(load_bundle(s.pinch));
  if (!s.caption.empty()) {
    auto [w, v] = load_caption_model(s.caption);
    c.caption = std::move(w);
    c.vocabulary = std::move(v);
  }
  c.k = s.k;
  c.d = s.d;
  c.max_caption_len = s.max_caption_len;
  c.caption_every_n = s.caption_every_n;
  return c;
}

}  // namespace gesture
