#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gesture/backbone.hpp"
#include "gesture/engine.hpp"
#include "gesture/filter_selection.hpp"
#include "gesture/trainer.hpp"

namespace gesture {

// Typed view of the key=value configuration file. Unknown keys are rejected.
struct Settings {
  SyntheticBackboneConfig backbone;
  FSParams fs;
  int k = 2;
  std::size_t d = 5;
  std::size_t max_caption_len = 20;
  std::size_t caption_every_n = 0;
  std::filesystem::path classifier;
  std::filesystem::path pinch;
  std::filesystem::path caption;
  std::filesystem::path fset_point;
  std::filesystem::path fset_drag;
  TrainConfig train;

  // Sets one key; relative paths are resolved against base.
  void set(const std::string& key, const std::string& value, const std::filesystem::path& base = {});
  static const std::vector<std::string>& keys();
};

// '#' starts a comment; blank lines are ignored.
Settings parse_settings(const std::string& text, const std::filesystem::path& base = {});
Settings load_settings(const std::filesystem::path& path);

std::shared_ptr<const Backbone> make_backbone(const Settings& s);
// Loads the referenced weights and filter sets.
SessionConfig make_session_config(const Settings& s);

}  // namespace gesture
