#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sdown/errors.hpp"

namespace sdown {

struct Shape4 {
  std::size_t n = 1, h = 1, w = 1, c = 1;

  std::size_t size() const { return n * h * w * c; }
  bool operator==(const Shape4&) const = default;
  std::string str() const;
};

// Dense NHWC array. Missing values are NaN and propagate through every layer
// op except the masked loss.
template <typename T>
class Grid4 {
 public:
  Grid4() : shape_{0, 0, 0, 0} {}
  explicit Grid4(Shape4 shape, T fill = T(0));
  Grid4(Shape4 shape, std::vector<T> data);

  const Shape4& shape() const { return shape_; }
  std::size_t n() const { return shape_.n; }
  std::size_t h() const { return shape_.h; }
  std::size_t w() const { return shape_.w; }
  std::size_t c() const { return shape_.c; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(std::size_t b, std::size_t y, std::size_t x, std::size_t ch) const {
    return ((b * shape_.h + y) * shape_.w + x) * shape_.c + ch;
  }
  T& at(std::size_t b, std::size_t y, std::size_t x, std::size_t ch) { return data_[index(b, y, x, ch)]; }
  const T& at(std::size_t b, std::size_t y, std::size_t x, std::size_t ch) const {
    return data_[index(b, y, x, ch)];
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  void fill(T v);
  // Same buffer, new dims; total size must match.
  Grid4 reshaped(Shape4 shape) const;
  // Copy of batch items [first, first + count).
  Grid4 slice_batch(std::size_t first, std::size_t count) const;

  template <typename U>
  Grid4<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Grid4<U>(shape_, std::move(out));
  }

 private:
  Shape4 shape_;
  std::vector<T> data_;
};

// Weight buffer with an arbitrary-rank shape (conv kernels are (kh, kw, c_in, c_out)).
template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, T fill = T(0));
  std::size_t size() const { return data.size(); }
};

void require_same_shape(const Shape4& a, const Shape4& b, const char* what);

extern template class Grid4<float>;
extern template class Grid4<double>;
extern template struct Tensor<float>;
extern template struct Tensor<double>;

}  // namespace sdown
