#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace gesture {

// Dense row-major f32 tensor. dims is never empty and every dim is >= 1.
class Tensor {
 public:
  Tensor() : Tensor(std::vector<std::size_t>{1}) {}
  explicit Tensor(std::vector<std::size_t> dims, float fill = 0.0f);
  Tensor(std::vector<std::size_t> dims, std::vector<float> data);

  static Tensor zeros(std::initializer_list<std::size_t> dims) { return Tensor(std::vector<std::size_t>(dims)); }

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t ndim() const { return dims_.size(); }
  std::size_t dim(std::size_t i) const { return dims_.at(i); }
  std::size_t size() const { return data_.size(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  const std::vector<float>& values() const { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  // 2-D and 3-D element access (row-major).
  float& at(std::size_t r, std::size_t c) { return data_[r * dims_[1] + c]; }
  float at(std::size_t r, std::size_t c) const { return data_[r * dims_[1] + c]; }
  float& at(std::size_t a, std::size_t b, std::size_t c) { return data_[(a * dims_[1] + b) * dims_[2] + c]; }
  float at(std::size_t a, std::size_t b, std::size_t c) const { return data_[(a * dims_[1] + b) * dims_[2] + c]; }

  // Copy of slice i along the first axis, e.g. one filter map of an (F,H,W) stack.
  Tensor slice(std::size_t i) const;

  bool operator==(const Tensor& other) const = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<float> data_;
};

std::size_t element_count(std::span<const std::size_t> dims);

// Half-open integer pixel box [x0,x1) x [y0,y1) with strictly positive area.
struct BBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 1;
  int y1 = 1;

  // Throws ParameterError when the box would be empty or inverted.
  static BBox make(int x0, int y0, int x1, int y1);

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  long long area() const { return static_cast<long long>(width()) * height(); }
  bool valid() const { return x0 < x1 && y0 < y1; }
  bool within(int w, int h) const { return x0 >= 0 && y0 >= 0 && x1 <= w && y1 <= h; }

  bool operator==(const BBox&) const = default;
};

class BinaryMask {
 public:
  BinaryMask(int width, int height);
  BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const { return width_; }
  int height() const { return height_; }
  bool get(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v = true) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
  std::size_t popcount() const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  bool operator==(const BinaryMask&) const = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> bits_;
};

double iou(const BBox& a, const BBox& b);

// Mean over predictions of each prediction's best IoU against the ground truth
// (ties go to the lowest truth index). Empty preds give 0; empty truths throw.
double match_iou(std::span<const BBox> preds, std::span<const BBox> truths);

// Binary dilation with an s x s square element clipped at the borders; s must be odd.
BinaryMask dilate(const BinaryMask& mask, int s);

// 8-connected components with at least min_area pixels, as tight boxes sorted by
// descending pixel count then (y0, x0).
std::vector<BBox> blobs(const BinaryMask& mask, long long min_area = 1);

// Corner-aligned bilinear resize of a 2-D tensor to (out_h, out_w).
Tensor resize_bilinear(const Tensor& t, int out_w, int out_h);

// Per-map min-max rescale into [0,1]; a constant map becomes all zeros.
Tensor rescale_unit(const Tensor& map);

// Pixels strictly greater than beta.
BinaryMask threshold(const Tensor& map, double beta);

}  // namespace gesture
