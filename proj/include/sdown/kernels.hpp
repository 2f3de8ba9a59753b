#pragma once

// Hot loops behind the layer ops. Convolutions are lowered to per-sample
// patch-matrix products (Eigen GEMM) with batch items spread over OpenMP
// threads; reductions over the batch run in a fixed order, so results do not
// depend on the thread count. The `reference` namespace keeps straightforward
// serial loops used by the tests and the kernel benchmark as a ground truth.
#include <cstddef>
#include <span>
#include <vector>

namespace sdown::kernels {

// NHWC input, (kh, kw, c_in, c_out) kernel, stride 1.
struct ConvGeometry {
  std::size_t n, h, w, c_in;
  std::size_t kh, kw, c_out;
  std::size_t pad_top, pad_left;
  std::size_t out_h, out_w;

  static ConvGeometry same(std::size_t n, std::size_t h, std::size_t w, std::size_t c_in, std::size_t kh,
                           std::size_t kw, std::size_t c_out);
  static ConvGeometry valid(std::size_t n, std::size_t h, std::size_t w, std::size_t c_in, std::size_t kh,
                            std::size_t kw, std::size_t c_out);
};

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> in, std::span<const T> kernel,
                    std::span<const T> bias, std::span<T> out);

// Overwrites d_in.
template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> d_out, std::span<const T> kernel,
                           std::span<T> d_in);

// Accumulates into d_kernel and d_bias (d_bias may be empty).
template <typename T>
void conv2d_backward_params(const ConvGeometry& g, std::span<const T> in, std::span<const T> d_out,
                            std::span<T> d_kernel, std::span<T> d_bias);

// Two-tap interpolation stencil along one axis, half-pixel centres, edge-clamped.
struct LinearTaps {
  std::vector<std::size_t> lo, hi;
  std::vector<double> w_lo, w_hi;
};
LinearTaps half_pixel_taps(std::size_t in_size, std::size_t out_size);

template <typename T>
void bilinear_forward(std::size_t n, std::size_t h, std::size_t w, std::size_t c, std::size_t out_h,
                      std::size_t out_w, std::span<const T> in, std::span<T> out);

// Adjoint of bilinear_forward; overwrites d_in.
template <typename T>
void bilinear_backward(std::size_t n, std::size_t h, std::size_t w, std::size_t c, std::size_t out_h,
                       std::size_t out_w, std::span<const T> d_out, std::span<T> d_in);

namespace reference {

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> in, std::span<const T> kernel,
                    std::span<const T> bias, std::span<T> out);
template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> d_out, std::span<const T> kernel,
                           std::span<T> d_in);
template <typename T>
void conv2d_backward_params(const ConvGeometry& g, std::span<const T> in, std::span<const T> d_out,
                            std::span<T> d_kernel, std::span<T> d_bias);

// Evaluates every output pixel from the continuous-coordinate definition.
template <typename T>
void bilinear_forward(std::size_t n, std::size_t h, std::size_t w, std::size_t c, std::size_t out_h,
                      std::size_t out_w, std::span<const T> in, std::span<T> out);

}  // namespace reference

}  // namespace sdown::kernels
