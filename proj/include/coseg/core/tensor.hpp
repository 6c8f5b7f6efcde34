#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace coseg {

/// Raised when tensor shapes do not line up for an operation.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for invalid configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NCHW extents of a rank-4 feature map.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  [[nodiscard]] std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  [[nodiscard]] std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  friend bool operator==(const Shape&, const Shape&) = default;

  [[nodiscard]] std::string str() const {
    std::ostringstream os;
    os << "(" << n << "," << c << "," << h << "," << w << ")";
    return os.str();
  }
};

/// Dense row-major rank-4 array. Owns its storage.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(shape), data_(shape.numel(), fill) {
    if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0)
      throw ShapeError("negative extent in shape " + shape.str());
  }
  Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape.numel())
      throw ShapeError("data size does not match shape " + shape.str());
  }

  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  [[nodiscard]] T* data() { return data_.data(); }
  [[nodiscard]] const T* data() const { return data_.data(); }
  [[nodiscard]] std::span<T> span() { return data_; }
  [[nodiscard]] std::span<const T> span() const { return data_; }
  [[nodiscard]] std::vector<T>& vec() { return data_; }
  [[nodiscard]] const std::vector<T>& vec() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  [[nodiscard]] std::size_t index(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  T& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
  const T& at(int n, int c, int h, int w) const { return data_[index(n, c, h, w)]; }

  /// Pointer to the first element of plane (n, c).
  T* plane(int n, int c) { return data_.data() + (static_cast<std::size_t>(n) * shape_.c + c) * shape_.plane(); }
  const T* plane(int n, int c) const {
    return data_.data() + (static_cast<std::size_t>(n) * shape_.c + c) * shape_.plane();
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <class U>
  [[nodiscard]] Tensor<U> cast() const {
    Tensor<U> out(shape_);
    std::transform(data_.begin(), data_.end(), out.data(), [](T v) { return static_cast<U>(v); });
    return out;
  }

  /// Copy of batch items [first, first + count).
  [[nodiscard]] Tensor slice_batch(int first, int count) const {
    if (first < 0 || count < 0 || first + count > shape_.n) throw ShapeError("batch slice out of range");
    Shape s = shape_;
    s.n = count;
    const std::size_t per = static_cast<std::size_t>(shape_.c) * shape_.plane();
    std::vector<T> d(data_.begin() + static_cast<std::ptrdiff_t>(first * per),
                     data_.begin() + static_cast<std::ptrdiff_t>((first + count) * per));
    return Tensor(s, std::move(d));
  }

 private:
  Shape shape_{};
  std::vector<T> data_;
};

/// Stack equally shaped tensors along the batch axis.
template <class T>
Tensor<T> concat_batch(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw ShapeError("concat_batch of nothing");
  Shape s = parts.front().shape();
  s.n = 0;
  for (const auto& p : parts) {
    if (p.shape().c != s.c || p.shape().h != s.h || p.shape().w != s.w)
      throw ShapeError("concat_batch: mismatched shape " + p.shape().str());
    s.n += p.shape().n;
  }
  std::vector<T> d;
  d.reserve(s.numel());
  for (const auto& p : parts) d.insert(d.end(), p.vec().begin(), p.vec().end());
  return Tensor<T>(s, std::move(d));
}

template <class T>
bool all_finite(const Tensor<T>& t) {
  return std::all_of(t.vec().begin(), t.vec().end(), [](T v) { return std::isfinite(v); });
}

/// Row-major 2D grid used for masks and single-slice maps.
template <class T>
struct Image {
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Image() = default;
  Image(int h, int w, T fill = T(0)) : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}
  Image(int h, int w, std::vector<T> d) : height(h), width(w), data(std::move(d)) {
    if (data.size() != static_cast<std::size_t>(h) * w) throw ShapeError("image data size mismatch");
  }

  [[nodiscard]] std::size_t size() const { return data.size(); }
  T& operator()(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& operator()(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
  friend bool operator==(const Image&, const Image&) = default;
};

using BinaryMask = Image<std::uint8_t>;
using LabelMask = Image<std::uint8_t>;

template <class A, class B>
void require_same_size(const Image<A>& a, const Image<B>& b, const char* what) {
  if (a.height != b.height || a.width != b.width) {
    std::ostringstream os;
    os << what << ": shape mismatch " << a.height << "x" << a.width << " vs " << b.height << "x" << b.width;
    throw ShapeError(os.str());
  }
}

/// Plane (n, c) of a tensor as a 2D image.
template <class T>
Image<T> to_image(const Tensor<T>& t, int n = 0, int c = 0) {
  const T* p = t.plane(n, c);
  return Image<T>(t.shape().h, t.shape().w, std::vector<T>(p, p + t.shape().plane()));
}

/// Stack 2D images into an (N, 1, H, W) tensor.
template <class T, class U>
Tensor<T> stack_images(std::span<const Image<U>> imgs) {
  if (imgs.empty()) throw ShapeError("stack_images of nothing");
  const int h = imgs.front().height;
  const int w = imgs.front().width;
  Tensor<T> out(Shape{static_cast<int>(imgs.size()), 1, h, w});
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    if (imgs[i].height != h || imgs[i].width != w) throw ShapeError("stack_images: mismatched sizes");
    std::transform(imgs[i].data.begin(), imgs[i].data.end(), out.plane(static_cast<int>(i), 0),
                   [](U v) { return static_cast<T>(v); });
  }
  return out;
}

}  // namespace coseg
