#include "gesture/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include "gesture/error.hpp"

namespace gesture {

void warn(const std::string& message) { std::clog << "warning: " << message << '\n'; }

std::size_t element_count(std::span<const std::size_t> dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

namespace {

void check_dims(const std::vector<std::size_t>& dims) {
  if (dims.empty()) throw ParameterError("tensor dims must be non-empty");
  for (auto d : dims) {
    if (d == 0) throw ParameterError("tensor dims must be >= 1");
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims, float fill) : dims_(std::move(dims)) {
  check_dims(dims_);
  data_.assign(element_count(dims_), fill);
}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<float> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  check_dims(dims_);
  if (data_.size() != element_count(dims_)) {
    std::ostringstream msg;
    msg << "tensor data length " << data_.size() << " does not match dims product " << element_count(dims_);
    throw ParameterError(msg.str());
  }
}

Tensor Tensor::slice(std::size_t i) const {
  if (dims_.size() < 2 || i >= dims_[0]) throw ParameterError("slice index out of range");
  std::vector<std::size_t> sub(dims_.begin() + 1, dims_.end());
  const std::size_t n = element_count(sub);
  std::vector<float> out(data_.begin() + static_cast<std::ptrdiff_t>(i * n),
                         data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
  return Tensor(std::move(sub), std::move(out));
}

BBox BBox::make(int x0, int y0, int x1, int y1) {
  if (!(x0 < x1 && y0 < y1)) {
    std::ostringstream msg;
    msg << "invalid box (" << x0 << "," << y0 << "," << x1 << "," << y1 << ")";
    throw ParameterError(msg.str());
  }
  return BBox{x0, y0, x1, y1};
}

BinaryMask::BinaryMask(int width, int height) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw ParameterError("mask extent must be positive");
  bits_.assign(static_cast<std::size_t>(width) * height, 0);
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (width <= 0 || height <= 0) throw ParameterError("mask extent must be positive");
  if (bits_.size() != static_cast<std::size_t>(width) * height) throw ParameterError("mask bits length mismatch");
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t BinaryMask::popcount() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

double iou(const BBox& a, const BBox& b) {
  const long long ix = std::max(0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const long long iy = std::max(0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const long long inter = ix * iy;
  const long long uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

double match_iou(std::span<const BBox> preds, std::span<const BBox> truths) {
  if (truths.empty()) throw DataError("no ground truth");
  if (preds.empty()) return 0.0;
  double total = 0.0;
  for (const auto& p : preds) {
    double best = 0.0;
    for (const auto& t : truths) best = std::max(best, iou(p, t));
    total += best;
  }
  return total / static_cast<double>(preds.size());
}

BinaryMask dilate(const BinaryMask& mask, int s) {
  if (s < 1 || s % 2 == 0) throw ParameterError("structuring element size must be odd and >= 1");
  if (s == 1) return mask;
  const int r = s / 2;
  const int w = mask.width();
  const int h = mask.height();

  // Separable: a square element is a horizontal run followed by a vertical run.
  std::vector<std::uint8_t> rows(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    int last = -1 - r;  // most recent set column seen
    for (int x = 0; x < w + r; ++x) {
      if (x < w && mask.get(x, y)) last = x;
      const int out = x - r;
      if (out >= 0 && out < w && last >= out - r) rows[static_cast<std::size_t>(y) * w + out] = 1;
    }
  }
  BinaryMask result(w, h);
  for (int x = 0; x < w; ++x) {
    int last = -1 - r;
    for (int y = 0; y < h + r; ++y) {
      if (y < h && rows[static_cast<std::size_t>(y) * w + x]) last = y;
      const int out = y - r;
      if (out >= 0 && out < h && last >= out - r) result.set(x, out);
    }
  }
  return result;
}

std::vector<BBox> blobs(const BinaryMask& mask, long long min_area) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
  struct Component {
    BBox box;
    long long pixels;
  };
  std::vector<Component> components;
  std::vector<std::pair<int, int>> stack;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto idx = static_cast<std::size_t>(y) * w + x;
      if (!mask.get(x, y) || seen[idx]) continue;
      Component comp{BBox{x, y, x + 1, y + 1}, 0};
      seen[idx] = 1;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        ++comp.pixels;
        comp.box.x0 = std::min(comp.box.x0, cx);
        comp.box.y0 = std::min(comp.box.y0, cy);
        comp.box.x1 = std::max(comp.box.x1, cx + 1);
        comp.box.y1 = std::max(comp.box.y1, cy + 1);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const auto nidx = static_cast<std::size_t>(ny) * w + nx;
            if (mask.get(nx, ny) && !seen[nidx]) {
              seen[nidx] = 1;
              stack.push_back({nx, ny});
            }
          }
        }
      }
      if (comp.pixels >= min_area) components.push_back(comp);
    }
  }
  std::stable_sort(components.begin(), components.end(), [](const Component& a, const Component& b) {
    if (a.pixels != b.pixels) return a.pixels > b.pixels;
    if (a.box.y0 != b.box.y0) return a.box.y0 < b.box.y0;
    return a.box.x0 < b.box.x0;
  });
  std::vector<BBox> out;
  out.reserve(components.size());
  for (const auto& c : components) out.push_back(c.box);
  return out;
}

Tensor resize_bilinear(const Tensor& t, int out_w, int out_h) {
  if (t.ndim() != 2) throw ParameterError("resize_bilinear expects a 2-D tensor");
  if (out_w <= 0 || out_h <= 0) throw ParameterError("resize target dims must be positive");
  const auto in_h = static_cast<int>(t.dim(0));
  const auto in_w = static_cast<int>(t.dim(1));
  Tensor out({static_cast<std::size_t>(out_h), static_cast<std::size_t>(out_w)});
  if (in_h == out_h && in_w == out_w) return t;

  const double sy = out_h > 1 ? static_cast<double>(in_h - 1) / (out_h - 1) : 0.0;
  const double sx = out_w > 1 ? static_cast<double>(in_w - 1) / (out_w - 1) : 0.0;
  std::vector<int> x0s(out_w), x1s(out_w);
  std::vector<double> fxs(out_w);
  for (int x = 0; x < out_w; ++x) {
    const double src = x * sx;
    x0s[x] = std::min(static_cast<int>(std::floor(src)), in_w - 1);
    x1s[x] = std::min(x0s[x] + 1, in_w - 1);
    fxs[x] = src - x0s[x];
  }
  for (int y = 0; y < out_h; ++y) {
    const double src = y * sy;
    const int y0 = std::min(static_cast<int>(std::floor(src)), in_h - 1);
    const int y1 = std::min(y0 + 1, in_h - 1);
    const double fy = src - y0;
    for (int x = 0; x < out_w; ++x) {
      const double top = t.at(y0, x0s[x]) * (1.0 - fxs[x]) + t.at(y0, x1s[x]) * fxs[x];
      const double bottom = t.at(y1, x0s[x]) * (1.0 - fxs[x]) + t.at(y1, x1s[x]) * fxs[x];
      out.at(y, x) = static_cast<float>(top * (1.0 - fy) + bottom * fy);
    }
  }
  return out;
}

Tensor rescale_unit(const Tensor& map) {
  const auto values = map.data();
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  Tensor out(map.dims());
  if (!(hi > lo)) return out;
  const double span = hi - lo;
  auto dst = out.data();
  for (std::size_t i = 0; i < values.size(); ++i) dst[i] = static_cast<float>((values[i] - lo) / span);
  return out;
}

BinaryMask threshold(const Tensor& map, double beta) {
  if (map.ndim() != 2) throw ParameterError("threshold expects a 2-D tensor");
  const auto h = static_cast<int>(map.dim(0));
  const auto w = static_cast<int>(map.dim(1));
  std::vector<std::uint8_t> bits(map.size());
  const auto values = map.data();
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = values[i] > beta ? 1 : 0;
  return BinaryMask(w, h, std::move(bits));
}

}  // namespace gesture
