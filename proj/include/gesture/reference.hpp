#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gesture/metrics.hpp"

namespace gesture {

// RFC 4180-style CSV: quoted fields may hold commas, quotes ("") and newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string csv_field(std::string_view value);  // quotes when needed

std::uint64_t fnv1a64(std::string_view bytes);

struct ReferenceValue {
  std::string table;
  std::string row;
  std::string metric;
  std::string variant;
  double value = 0.0;
  std::string citation;
};

// Read-only transcribed constants, checked against a frozen checksum on load.
class ReferenceData {
 public:
  static ReferenceData load(const std::filesystem::path& dir);

  double lookup(std::string_view table, std::string_view row, std::string_view metric,
                std::string_view variant = "") const;
  const std::vector<ReferenceValue>& values() const { return values_; }
  const std::vector<ModelPoint>& model_points() const { return points_; }

 private:
  std::vector<ReferenceValue> values_;
  std::vector<ModelPoint> points_;
};

// Expected checksums of the bundled files.
std::uint64_t reference_tables_checksum();
std::uint64_t reference_points_checksum();

// Directory holding the bundled reference CSVs (compile-time default).
std::filesystem::path default_reference_dir();

// name,f1,params[,...] with a header row.
std::vector<ModelPoint> read_model_points(const std::filesystem::path& path);
std::vector<ModelPoint> parse_model_points(std::string_view csv_text);
// Plot data for every point: name,f1,params,non_dominated
std::string pareto_csv(std::span<const ModelPoint> points);
// Only the non-dominated points, by ascending params: name,f1,params
std::string pareto_front_csv(std::span<const ModelPoint> points);

}  // namespace gesture
