#include "gesture/atn.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "gesture/error.hpp"

namespace gesture {

namespace {

constexpr char kMagic[4] = {'A', 'T', 'N', 'S'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  return v;
}

}  // namespace

std::string encode_tensor(const Tensor& t) {
  std::string out(kMagic, 4);
  put_u32(out, kAtnVersion);
  put_u32(out, static_cast<std::uint32_t>(t.ndim()));
  for (auto d : t.dims()) {
    if (d > std::numeric_limits<std::uint32_t>::max()) throw ParameterError("tensor dim exceeds u32");
    put_u32(out, static_cast<std::uint32_t>(d));
  }
  out.reserve(out.size() + 4 * t.size());
  for (float f : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

Tensor decode_tensor(const std::string& bytes) {
  if (bytes.size() < 12) throw DataError("truncated header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw DataError("bad magic");
  const auto version = get_u32(bytes, 4);
  if (version != kAtnVersion) throw DataError("unsupported .atn version " + std::to_string(version));
  const auto ndim = get_u32(bytes, 8);
  if (ndim == 0) throw DataError("zero-dimensional tensor");
  if (bytes.size() < 12 + 4ull * ndim) throw DataError("truncated dims");

  std::vector<std::size_t> dims(ndim);
  unsigned long long count = 1;
  const unsigned long long max_count = (bytes.size() - 12) / 4;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    dims[i] = get_u32(bytes, 12 + 4ull * i);
    if (dims[i] == 0) throw DataError("zero dim");
    if (count > max_count / dims[i]) throw DataError("dim overflow");
    count *= dims[i];
  }
  const std::size_t payload_at = 12 + 4ull * ndim;
  if (bytes.size() - payload_at < 4 * count) throw DataError("truncated payload");
  if (bytes.size() - payload_at > 4 * count) throw DataError("trailing bytes after payload");
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) data[i] = std::bit_cast<float>(get_u32(bytes, payload_at + 4 * i));
  return Tensor(std::move(dims), std::move(data));
}

void save_tensor(const Tensor& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const auto bytes = encode_tensor(t);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_tensor(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

const Tensor& WeightBundle::tensor(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw DataError("weight bundle has no tensor '" + name + "'");
  return it->second;
}

const std::string& WeightBundle::meta_value(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw DataError("weight bundle has no meta key '" + key + "'");
  return it->second;
}

void save_bundle(const WeightBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw DataError("cannot write manifest in " + dir.string());
  manifest << "kind " << bundle.kind << '\n';
  for (const auto& [k, v] : bundle.meta) manifest << "meta " << k << ' ' << v << '\n';
  for (const auto& [name, t] : bundle.tensors) {
    const std::string file = name + ".atn";
    save_tensor(t, dir / file);
    manifest << "tensor " << name << ' ' << file << '\n';
  }
}

WeightBundle load_bundle(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw DataError("missing manifest.txt in " + dir.string());
  WeightBundle bundle;
  std::string line;
  int lineno = 0;
  while (std::getline(manifest, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tag, a, b;
    ss >> tag >> a;
    std::getline(ss >> std::ws, b);
    if (tag == "kind") {
      bundle.kind = a;
    } else if (tag == "meta") {
      bundle.meta[a] = b;
    } else if (tag == "tensor") {
      bundle.tensors.emplace(a, load_tensor(dir / b));
    } else {
      throw DataError(dir.string() + "/manifest.txt:" + std::to_string(lineno) + ": unknown entry '" + tag + "'");
    }
  }
  return bundle;
}

}  // namespace gesture
