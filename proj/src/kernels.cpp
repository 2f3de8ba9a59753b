#include "sdown/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#define EIGEN_DONT_PARALLELIZE
#include <Eigen/Core>

namespace sdown::kernels {

ConvGeometry ConvGeometry::same(std::size_t n, std::size_t h, std::size_t w, std::size_t c_in, std::size_t kh,
                                std::size_t kw, std::size_t c_out) {
  return {n, h, w, c_in, kh, kw, c_out, (kh - 1) / 2, (kw - 1) / 2, h, w};
}

ConvGeometry ConvGeometry::valid(std::size_t n, std::size_t h, std::size_t w, std::size_t c_in, std::size_t kh,
                                 std::size_t kw, std::size_t c_out) {
  return {n, h, w, c_in, kh, kw, c_out, 0, 0, h - kh + 1, w - kw + 1};
}

namespace {

// Input coordinate feeding output coordinate `o` through kernel tap `k`, or -1.
inline std::ptrdiff_t source(std::size_t o, std::size_t k, std::size_t pad, std::size_t extent) {
  const auto s = static_cast<std::ptrdiff_t>(o + k) - static_cast<std::ptrdiff_t>(pad);
  return (s < 0 || s >= static_cast<std::ptrdiff_t>(extent)) ? -1 : s;
}

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Patch matrix of sample b: one row per output pixel, (ky, kx, ci) columns, zeros off the grid.
template <typename T>
void im2col(const ConvGeometry& g, const T* in, std::size_t b, T* patches) {
  const std::size_t cin = g.c_in, cols = g.kh * g.kw * cin;
  for (std::size_t oy = 0; oy < g.out_h; ++oy)
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      T* row = patches + (oy * g.out_w + ox) * cols;
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        const auto yi = source(oy, ky, g.pad_top, g.h);
        for (std::size_t kx = 0; kx < g.kw; ++kx) {
          T* dst = row + (ky * g.kw + kx) * cin;
          const auto xi = source(ox, kx, g.pad_left, g.w);
          if (yi < 0 || xi < 0) {
            std::fill(dst, dst + cin, T(0));
            continue;
          }
          const T* src = in + ((b * g.h + static_cast<std::size_t>(yi)) * g.w + static_cast<std::size_t>(xi)) * cin;
          std::copy(src, src + cin, dst);
        }
      }
    }
}

// Scatter-adds a patch-gradient matrix of sample b back onto the input grid.
template <typename T>
void col2im(const ConvGeometry& g, const T* patches, std::size_t b, T* d_in) {
  const std::size_t cin = g.c_in, cols = g.kh * g.kw * cin;
  for (std::size_t oy = 0; oy < g.out_h; ++oy)
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      const T* row = patches + (oy * g.out_w + ox) * cols;
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        const auto yi = source(oy, ky, g.pad_top, g.h);
        if (yi < 0) continue;
        for (std::size_t kx = 0; kx < g.kw; ++kx) {
          const auto xi = source(ox, kx, g.pad_left, g.w);
          if (xi < 0) continue;
          const T* src = row + (ky * g.kw + kx) * cin;
          T* dst = d_in + ((b * g.h + static_cast<std::size_t>(yi)) * g.w + static_cast<std::size_t>(xi)) * cin;
          for (std::size_t ci = 0; ci < cin; ++ci) dst[ci] += src[ci];
        }
      }
    }
}

// A 1x1 kernel without padding reads the input rows directly.
bool pointwise(const ConvGeometry& g) {
  return g.kh == 1 && g.kw == 1 && g.pad_top == 0 && g.pad_left == 0 && g.out_h == g.h && g.out_w == g.w;
}

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> in, std::span<const T> kernel,
                    std::span<const T> bias, std::span<T> out) {
  const auto pixels = static_cast<Eigen::Index>(g.out_h * g.out_w);
  const auto cols = static_cast<Eigen::Index>(g.kh * g.kw * g.c_in);
  const auto cout = static_cast<Eigen::Index>(g.c_out);
  const Eigen::Map<const RowMat<T>> k(kernel.data(), cols, cout);
  const auto n = static_cast<std::int64_t>(g.n);
  const bool direct = pointwise(g);

#pragma omp parallel
  {
    std::vector<T> buf(direct ? 0 : static_cast<std::size_t>(pixels * cols));
#pragma omp for schedule(static)
    for (std::int64_t b = 0; b < n; ++b) {
      const auto bs = static_cast<std::size_t>(b);
      const T* p = in.data() + bs * g.h * g.w * g.c_in;
      if (!direct) {
        im2col(g, in.data(), bs, buf.data());
        p = buf.data();
      }
      Eigen::Map<RowMat<T>> o(out.data() + bs * static_cast<std::size_t>(pixels * cout), pixels, cout);
      o.noalias() = Eigen::Map<const RowMat<T>>(p, pixels, cols) * k;
      if (!bias.empty()) o.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.data(), cout);
    }
  }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> d_out, std::span<const T> kernel,
                           std::span<T> d_in) {
  const auto pixels = static_cast<Eigen::Index>(g.out_h * g.out_w);
  const auto cols = static_cast<Eigen::Index>(g.kh * g.kw * g.c_in);
  const auto cout = static_cast<Eigen::Index>(g.c_out);
  const Eigen::Map<const RowMat<T>> k(kernel.data(), cols, cout);
  const auto n = static_cast<std::int64_t>(g.n);
  const bool direct = pointwise(g);
  const std::size_t in_size = g.h * g.w * g.c_in;

#pragma omp parallel
  {
    std::vector<T> buf(direct ? 0 : static_cast<std::size_t>(pixels * cols));
#pragma omp for schedule(static)
    for (std::int64_t b = 0; b < n; ++b) {
      const auto bs = static_cast<std::size_t>(b);
      const Eigen::Map<const RowMat<T>> d(d_out.data() + bs * static_cast<std::size_t>(pixels * cout), pixels, cout);
      T* di = d_in.data() + bs * in_size;
      if (direct) {
        Eigen::Map<RowMat<T>>(di, pixels, cols).noalias() = d * k.transpose();
        continue;
      }
      Eigen::Map<RowMat<T>>(buf.data(), pixels, cols).noalias() = d * k.transpose();
      std::fill(di, di + in_size, T(0));
      col2im(g, buf.data(), bs, d_in.data());
    }
  }
}

template <typename T>
void conv2d_backward_params(const ConvGeometry& g, std::span<const T> in, std::span<const T> d_out,
                            std::span<T> d_kernel, std::span<T> d_bias) {
  const auto pixels = static_cast<Eigen::Index>(g.out_h * g.out_w);
  const auto cols = static_cast<Eigen::Index>(g.kh * g.kw * g.c_in);
  const auto cout = static_cast<Eigen::Index>(g.c_out);
  const auto n = static_cast<std::int64_t>(g.n);
  const bool direct = pointwise(g);
  const auto kernel_size = static_cast<std::size_t>(cols * cout);

  // Per-sample partials, summed in sample order so the result does not depend on the thread count.
  std::vector<T> partial(static_cast<std::size_t>(n) * kernel_size);
#pragma omp parallel
  {
    std::vector<T> buf(direct ? 0 : static_cast<std::size_t>(pixels * cols));
#pragma omp for schedule(static)
    for (std::int64_t b = 0; b < n; ++b) {
      const auto bs = static_cast<std::size_t>(b);
      const T* p = in.data() + bs * g.h * g.w * g.c_in;
      if (!direct) {
        im2col(g, in.data(), bs, buf.data());
        p = buf.data();
      }
      const Eigen::Map<const RowMat<T>> d(d_out.data() + bs * static_cast<std::size_t>(pixels * cout), pixels, cout);
      Eigen::Map<RowMat<T>>(partial.data() + bs * kernel_size, cols, cout).noalias() =
          Eigen::Map<const RowMat<T>>(p, pixels, cols).transpose() * d;
    }
  }
  for (std::size_t b = 0; b < static_cast<std::size_t>(n); ++b) {
    const T* src = partial.data() + b * kernel_size;
    for (std::size_t i = 0; i < kernel_size; ++i) d_kernel[i] += src[i];
  }

  if (!d_bias.empty()) {
    const std::size_t total = g.n * g.out_h * g.out_w;
    for (std::size_t p = 0; p < total; ++p) {
      const T* d = d_out.data() + p * g.c_out;
      for (std::size_t co = 0; co < g.c_out; ++co) d_bias[co] += d[co];
    }
  }
}

LinearTaps half_pixel_taps(std::size_t in_size, std::size_t out_size) {
  LinearTaps taps;
  taps.lo.resize(out_size);
  taps.hi.resize(out_size);
  taps.w_lo.resize(out_size);
  taps.w_hi.resize(out_size);
  const double scale = static_cast<double>(in_size) / static_cast<double>(out_size);
  for (std::size_t o = 0; o < out_size; ++o) {
    double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in_size - 1));
    const auto lo = static_cast<std::size_t>(std::floor(src));
    const std::size_t hi = std::min(lo + 1, in_size - 1);
    const double frac = src - static_cast<double>(lo);
    taps.lo[o] = lo;
    taps.hi[o] = hi;
    taps.w_lo[o] = 1.0 - frac;
    taps.w_hi[o] = frac;
  }
  return taps;
}

template <typename T>
void bilinear_forward(std::size_t n, std::size_t h, std::size_t w, std::size_t c, std::size_t out_h,
                      std::size_t out_w, std::span<const T> in, std::span<T> out) {
  const LinearTaps ty = half_pixel_taps(h, out_h);
  const LinearTaps tx = half_pixel_taps(w, out_w);
  const auto rows = static_cast<std::int64_t>(n * out_h);

#pragma omp parallel for schedule(static)
  for (std::int64_t row = 0; row < rows; ++row) {
    const std::size_t b = static_cast<std::size_t>(row) / out_h;
    const std::size_t oy = static_cast<std::size_t>(row) % out_h;
    const T wy0 = static_cast<T>(ty.w_lo[oy]), wy1 = static_cast<T>(ty.w_hi[oy]);
    const T* r0 = in.data() + (b * h + ty.lo[oy]) * w * c;
    const T* r1 = in.data() + (b * h + ty.hi[oy]) * w * c;
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const T wx0 = static_cast<T>(tx.w_lo[ox]), wx1 = static_cast<T>(tx.w_hi[ox]);
      const std::size_t x0 = tx.lo[ox] * c, x1 = tx.hi[ox] * c;
      T* o = out.data() + ((b * out_h + oy) * out_w + ox) * c;
      for (std::size_t ch = 0; ch < c; ++ch)
        o[ch] = wy0 * (wx0 * r0[x0 + ch] + wx1 * r0[x1 + ch]) + wy1 * (wx0 * r1[x0 + ch] + wx1 * r1[x1 + ch]);
    }
  }
}

template <typename T>
void bilinear_backward(std::size_t n, std::size_t h, std::size_t w, std::size_t c, std::size_t out_h,
                       std::size_t out_w, std::span<const T> d_out, std::span<T> d_in) {
  const LinearTaps ty = half_pixel_taps(h, out_h);
  const LinearTaps tx = half_pixel_taps(w, out_w);
  std::fill(d_in.begin(), d_in.end(), T(0));

#pragma omp parallel for schedule(static)
  for (std::int64_t bi = 0; bi < static_cast<std::int64_t>(n); ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      const T wy0 = static_cast<T>(ty.w_lo[oy]), wy1 = static_cast<T>(ty.w_hi[oy]);
      T* r0 = d_in.data() + (b * h + ty.lo[oy]) * w * c;
      T* r1 = d_in.data() + (b * h + ty.hi[oy]) * w * c;
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const T wx0 = static_cast<T>(tx.w_lo[ox]), wx1 = static_cast<T>(tx.w_hi[ox]);
        const std::size_t x0 = tx.lo[ox] * c, x1 = tx.hi[ox] * c;
        const T* d = d_out.data() + ((b * out_h + oy) * out_w + ox) * c;
        for (std::size_t ch = 0; ch < c; ++ch) {
          r0[x0 + ch] += wy0 * wx0 * d[ch];
          r0[x1 + ch] += wy0 * wx1 * d[ch];
          r1[x0 + ch] += wy1 * wx0 * d[ch];
          r1[x1 + ch] += wy1 * wx1 * d[ch];
        }
      }
    }
  }
}

namespace reference {

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> in, std::span<const T> kernel,
                    std::span<const T> bias, std::span<T> out) {
  for (std::size_t b = 0; b < g.n; ++b)
    for (std::size_t oy = 0; oy < g.out_h; ++oy)
      for (std::size_t ox = 0; ox < g.out_w; ++ox)
        for (std::size_t co = 0; co < g.c_out; ++co) {
          T acc = bias.empty() ? T(0) : bias[co];
          for (std::size_t ky = 0; ky < g.kh; ++ky)
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
              const auto yi = source(oy, ky, g.pad_top, g.h);
              const auto xi = source(ox, kx, g.pad_left, g.w);
              if (yi < 0 || xi < 0) continue;
              for (std::size_t ci = 0; ci < g.c_in; ++ci)
                acc += in[((b * g.h + static_cast<std::size_t>(yi)) * g.w + static_cast<std::size_t>(xi)) * g.c_in + ci] *
                       kernel[((ky * g.kw + kx) * g.c_in + ci) * g.c_out + co];
            }
          out[((b * g.out_h + oy) * g.out_w + ox) * g.c_out + co] = acc;
        }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> d_out, std::span<const T> kernel,
                           std::span<T> d_in) {
  std::fill(d_in.begin(), d_in.end(), T(0));
  for (std::size_t b = 0; b < g.n; ++b)
    for (std::size_t oy = 0; oy < g.out_h; ++oy)
      for (std::size_t ox = 0; ox < g.out_w; ++ox)
        for (std::size_t ky = 0; ky < g.kh; ++ky)
          for (std::size_t kx = 0; kx < g.kw; ++kx) {
            const auto yi = source(oy, ky, g.pad_top, g.h);
            const auto xi = source(ox, kx, g.pad_left, g.w);
            if (yi < 0 || xi < 0) continue;
            for (std::size_t ci = 0; ci < g.c_in; ++ci)
              for (std::size_t co = 0; co < g.c_out; ++co)
                d_in[((b * g.h + static_cast<std::size_t>(yi)) * g.w + static_cast<std::size_t>(xi)) * g.c_in + ci] +=
                    d_out[((b * g.out_h + oy) * g.out_w + ox) * g.c_out + co] *
                    kernel[((ky * g.kw + kx) * g.c_in + ci) * g.c_out + co];
          }
}

template <typename T>
void conv2d_backward_params(const ConvGeometry& g, std::span<const T> in, std::span<const T> d_out,
                            std::span<T> d_kernel, std::span<T> d_bias) {
  for (std::size_t b = 0; b < g.n; ++b)
    for (std::size_t oy = 0; oy < g.out_h; ++oy)
      for (std::size_t ox = 0; ox < g.out_w; ++ox)
        for (std::size_t co = 0; co < g.c_out; ++co) {
          const T d = d_out[((b * g.out_h + oy) * g.out_w + ox) * g.c_out + co];
          if (!d_bias.empty()) d_bias[co] += d;
          for (std::size_t ky = 0; ky < g.kh; ++ky)
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
              const auto yi = source(oy, ky, g.pad_top, g.h);
              const auto xi = source(ox, kx, g.pad_left, g.w);
              if (yi < 0 || xi < 0) continue;
              for (std::size_t ci = 0; ci < g.c_in; ++ci)
                d_kernel[((ky * g.kw + kx) * g.c_in + ci) * g.c_out + co] +=
                    d * in[((b * g.h + static_cast<std::size_t>(yi)) * g.w + static_cast<std::size_t>(xi)) * g.c_in + ci];
            }
        }
}

template <typename T>
void bilinear_forward(std::size_t n, std::size_t h, std::size_t w, std::size_t c, std::size_t out_h,
                      std::size_t out_w, std::span<const T> in, std::span<T> out) {
  auto coord = [](std::size_t o, std::size_t in_size, std::size_t out_size) {
    const double s = (static_cast<double>(o) + 0.5) * static_cast<double>(in_size) / static_cast<double>(out_size) - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(in_size - 1));
  };
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t oy = 0; oy < out_h; ++oy)
      for (std::size_t ox = 0; ox < out_w; ++ox)
        for (std::size_t ch = 0; ch < c; ++ch) {
          const double sy = coord(oy, h, out_h), sx = coord(ox, w, out_w);
          // Hat-function weights over every source pixel.
          double acc = 0;
          for (std::size_t y = 0; y < h; ++y) {
            const double wy = std::max(0.0, 1.0 - std::abs(sy - static_cast<double>(y)));
            if (wy == 0) continue;
            for (std::size_t x = 0; x < w; ++x) {
              const double wx = std::max(0.0, 1.0 - std::abs(sx - static_cast<double>(x)));
              if (wx == 0) continue;
              acc += wy * wx * static_cast<double>(in[((b * h + y) * w + x) * c + ch]);
            }
          }
          out[((b * out_h + oy) * out_w + ox) * c + ch] = static_cast<T>(acc);
        }
}

}  // namespace reference

#define SDOWN_INSTANTIATE(T)                                                                                  \
  template void conv2d_forward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,               \
                                  std::span<const T>, std::span<T>);                                         \
  template void conv2d_backward_input<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,        \
                                         std::span<T>);                                                      \
  template void conv2d_backward_params<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,       \
                                          std::span<T>, std::span<T>);                                       \
  template void bilinear_forward<T>(std::size_t, std::size_t, std::size_t, std::size_t, std::size_t,         \
                                    std::size_t, std::span<const T>, std::span<T>);                          \
  template void bilinear_backward<T>(std::size_t, std::size_t, std::size_t, std::size_t, std::size_t,        \
                                     std::size_t, std::span<const T>, std::span<T>);                         \
  template void reference::conv2d_forward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,    \
                                             std::span<const T>, std::span<T>);                              \
  template void reference::conv2d_backward_input<T>(const ConvGeometry&, std::span<const T>,                 \
                                                    std::span<const T>, std::span<T>);                       \
  template void reference::conv2d_backward_params<T>(const ConvGeometry&, std::span<const T>,                \
                                                     std::span<const T>, std::span<T>, std::span<T>);        \
  template void reference::bilinear_forward<T>(std::size_t, std::size_t, std::size_t, std::size_t,           \
                                               std::size_t, std::size_t, std::span<const T>, std::span<T>);

SDOWN_INSTANTIATE(float)
SDOWN_INSTANTIATE(double)

}  // namespace sdown::kernels
