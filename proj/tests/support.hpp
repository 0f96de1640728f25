#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "gesture/tensor.hpp"

namespace test {

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("gesture_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline gesture::BBox random_box(std::mt19937_64& rng, int extent) {
  std::uniform_int_distribution<int> pos(0, extent - 2);
  const int x0 = pos(rng);
  const int y0 = pos(rng);
  std::uniform_int_distribution<int> wx(1, extent - x0);
  std::uniform_int_distribution<int> wy(1, extent - y0);
  return gesture::BBox::make(x0, y0, x0 + wx(rng), y0 + wy(rng));
}

}  // namespace test
