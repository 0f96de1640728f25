#include "gesture/reference.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "gesture/error.hpp"

#ifndef GESTURE_REFERENCE_DIR
#define GESTURE_REFERENCE_DIR "data/reference"
#endif

namespace gesture {

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (quoted) throw DataError("csv: unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t reference_tables_checksum() { return 0x5f600e34060af787ULL; }
std::uint64_t reference_points_checksum() { return 0x735b608a26597ed3ULL; }

std::filesystem::path default_reference_dir() { return GESTURE_REFERENCE_DIR; }

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double to_number(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw DataError(where + ": '" + s + "' is not a number");
  }
}

}  // namespace

ReferenceData ReferenceData::load(const std::filesystem::path& dir) {
  const auto tables_path = dir / "reference_tables.csv";
  const auto points_path = dir / "model_points.csv";
  const auto tables = slurp(tables_path);
  const auto points = slurp(points_path);
  if (fnv1a64(tables) != reference_tables_checksum()) throw DataError(tables_path.string() + ": checksum mismatch");
  if (fnv1a64(points) != reference_points_checksum()) throw DataError(points_path.string() + ": checksum mismatch");

  ReferenceData data;
  const auto rows = parse_csv(tables);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 6) throw DataError(tables_path.string() + ": row " + std::to_string(i) + " needs 6 fields");
    data.values_.push_back({r[0], r[1], r[2], r[3], to_number(r[4], tables_path.string()), r[5]});
  }
  data.points_ = parse_model_points(points);
  return data;
}

double ReferenceData::lookup(std::string_view table, std::string_view row, std::string_view metric,
                             std::string_view variant) const {
  for (const auto& v : values_) {
    if (v.table == table && v.row == row && v.metric == metric && v.variant == variant) return v.value;
  }
  throw ParameterError("no reference value for (" + std::string(table) + ", " + std::string(row) + ", " +
                       std::string(metric) + (variant.empty() ? "" : ", " + std::string(variant)) + ")");
}

std::vector<ModelPoint> parse_model_points(std::string_view csv_text) {
  const auto rows = parse_csv(csv_text);
  if (rows.empty()) throw DataError("points csv: missing header");
  const auto& header = rows.front();
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw DataError("points csv: missing column '" + name + "'");
  };
  const auto ni = column("name");
  const auto fi = column("f1");
  const auto pi = column("params");
  std::vector<ModelPoint> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != header.size()) throw DataError("points csv: row " + std::to_string(i) + " has the wrong width");
    ModelPoint p{r[ni], to_number(r[fi], "points csv"), to_number(r[pi], "points csv")};
    if (p.f1 < 0.0 || p.f1 > 100.0) throw DataError("points csv: f1 of " + p.name + " outside [0,100]");
    if (!(p.params > 0.0)) throw DataError("points csv: params of " + p.name + " must be positive");
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<ModelPoint> read_model_points(const std::filesystem::path& path) {
  try {
    return parse_model_points(slurp(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string pareto_csv(std::span<const ModelPoint> points) {
  const auto front = pareto_front(points);
  std::ostringstream out;
  out.precision(10);
  out << "name,f1,params,non_dominated\n";
  for (const auto& p : points) {
    const bool nd = std::any_of(front.begin(), front.end(), [&](const ModelPoint& q) { return q.name == p.name; });
    out << csv_field(p.name) << ',' << p.f1 << ',' << p.params << ',' << (nd ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string pareto_front_csv(std::span<const ModelPoint> points) {
  std::ostringstream out;
  out.precision(10);
  out << "name,f1,params\n";
  for (const auto& p : pareto_front(points)) out << csv_field(p.name) << ',' << p.f1 << ',' << p.params << '\n';
  return out.str();
}

}  // namespace gesture
