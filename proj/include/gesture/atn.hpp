#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "gesture/tensor.hpp"

namespace gesture {

// .atn container: "ATNS", u32 version (1), u32 ndim, ndim x u32 dims, then f32
// payload; everything little-endian, payload row-major.
inline constexpr std::uint32_t kAtnVersion = 1;

void save_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

std::string encode_tensor(const Tensor& t);
Tensor decode_tensor(const std::string& bytes);

// A directory of named .atn tensors plus manifest.txt:
//   kind <head kind>
//   meta <key> <value>
//   tensor <name> <file>
struct WeightBundle {
  std::string kind;
  std::map<std::string, std::string> meta;
  std::map<std::string, Tensor> tensors;

  const Tensor& tensor(const std::string& name) const;
  const std::string& meta_value(const std::string& key) const;
};

void save_bundle(const WeightBundle& bundle, const std::filesystem::path& dir);
WeightBundle load_bundle(const std::filesystem::path& dir);

}  // namespace gesture
