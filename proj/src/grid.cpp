#include "sdown/grid.hpp"

#include <algorithm>
#include <numeric>

namespace sdown {

std::string Shape4::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(h) + "," + std::to_string(w) + "," +
         std::to_string(c) + ")";
}

void require_same_shape(const Shape4& a, const Shape4& b, const char* what) {
  if (!(a == b)) throw ShapeError(std::string(what) + ": shape mismatch " + a.str() + " vs " + b.str());
}

namespace {
void check_dims(const Shape4& s) {
  // Channel count may be zero (an empty channel stack); spatial and batch dims may not.
  if (s.n == 0 || s.h == 0 || s.w == 0) throw ShapeError("Grid4: dims must be >= 1, got " + s.str());
}
}  // namespace

template <typename T>
Grid4<T>::Grid4(Shape4 shape, T fill) : shape_(shape), data_(shape.size(), fill) {
  check_dims(shape_);
}

template <typename T>
Grid4<T>::Grid4(Shape4 shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
  check_dims(shape_);
  if (data_.size() != shape_.size())
    throw ShapeError("Grid4: buffer length " + std::to_string(data_.size()) + " does not match " + shape_.str());
}

template <typename T>
void Grid4<T>::fill(T v) {
  std::fill(data_.begin(), data_.end(), v);
}

template <typename T>
Grid4<T> Grid4<T>::reshaped(Shape4 shape) const {
  if (shape.size() != data_.size())
    throw ShapeError("reshape: " + shape_.str() + " cannot become " + shape.str());
  return Grid4<T>(shape, data_);
}

template <typename T>
Grid4<T> Grid4<T>::slice_batch(std::size_t first, std::size_t count) const {
  if (first + count > shape_.n || count == 0) throw ShapeError("slice_batch: range out of bounds");
  const std::size_t item = shape_.h * shape_.w * shape_.c;
  std::vector<T> out(data_.begin() + static_cast<std::ptrdiff_t>(first * item),
                     data_.begin() + static_cast<std::ptrdiff_t>((first + count) * item));
  return Grid4<T>({count, shape_.h, shape_.w, shape_.c}, std::move(out));
}

template <typename T>
Tensor<T>::Tensor(std::vector<std::size_t> dims, T fill) : shape(std::move(dims)) {
  const std::size_t total = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  data.assign(total, fill);
}

template class Grid4<float>;
template class Grid4<double>;
template struct Tensor<float>;
template struct Tensor<double>;

}  // namespace sdown
