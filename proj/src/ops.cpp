#include "sdown/ops.hpp"

#include <cmath>
#include <memory>
#include <random>

#include "sdown/kernels.hpp"

namespace sdown::ops {

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

template <typename T>
void add_into(Grid4<T>& dst, std::span<const T> src) {
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
}

}  // namespace

template <typename T>
Var conv2d(Tape<T>& tape, Var x, LayerParams<T>& p, Padding padding) {
  const auto& in = tape.value(x);
  const auto& kernel = p.weight("kernel");
  if (kernel.shape.size() != 4) throw ShapeError("conv2d: kernel of layer '" + p.name + "' is not rank 4");
  const std::size_t kh = kernel.shape[0], kw = kernel.shape[1], cin = kernel.shape[2], cout = kernel.shape[3];
  if (cin != in.c())
    throw ShapeError("conv2d '" + p.name + "': input " + in.shape().str() + " has " + std::to_string(in.c()) +
                     " channels but kernel (" + std::to_string(kh) + "," + std::to_string(kw) + "," +
                     std::to_string(cin) + "," + std::to_string(cout) + ") expects " + std::to_string(cin));
  if (padding == Padding::valid && (kh > in.h() || kw > in.w()))
    throw ShapeError("conv2d '" + p.name + "': valid padding with kernel larger than input " + in.shape().str());

  const auto g = padding == Padding::same ? kernels::ConvGeometry::same(in.n(), in.h(), in.w(), cin, kh, kw, cout)
                                          : kernels::ConvGeometry::valid(in.n(), in.h(), in.w(), cin, kh, kw, cout);
  Grid4<T> out({in.n(), g.out_h, g.out_w, cout});
  std::span<const T> bias;
  if (p.has("bias")) bias = p.weight("bias").data;
  kernels::conv2d_forward<T>(g, in.data(), kernel.data, bias, out.data());

  LayerParams<T>* params = &p;
  auto backward = [x, params, g](Tape<T>& t, std::size_t self) {
    const auto& d_out = t.grad(Var{self});
    if (params->trainable) {
      std::span<T> d_bias;
      if (params->has("bias")) d_bias = params->grad("bias").data;
      kernels::conv2d_backward_params<T>(g, t.value(x).data(), d_out.data(), params->grad("kernel").data, d_bias);
    }
    if (t.needs_grad(x)) {
      std::vector<T> d_in(t.value(x).size());
      kernels::conv2d_backward_input<T>(g, d_out.data(), params->weight("kernel").data, d_in);
      t.accumulate_grad(x, d_in);
    }
  };
  return tape.record("conv2d", std::move(out), {x}, backward, p.trainable);
}

template <typename T>
Var dense(Tape<T>& tape, Var x, LayerParams<T>& p) {
  const auto& in = tape.value(x);
  const auto& kernel = p.weight("kernel");
  const std::size_t n = in.n(), len = in.h() * in.w() * in.c();
  if (kernel.shape.size() != 2 || kernel.shape[0] != len)
    throw ShapeError("dense '" + p.name + "': input " + in.shape().str() + " flattens to " + std::to_string(len) +
                     " but kernel inner dim is " + std::to_string(kernel.shape.empty() ? 0 : kernel.shape[0]));
  const std::size_t out_len = kernel.shape[1];
  Grid4<T> out({n, 1, 1, out_len});
  const bool has_bias = p.has("bias");
  for (std::size_t b = 0; b < n; ++b) {
    T* y = out.data().data() + b * out_len;
    for (std::size_t o = 0; o < out_len; ++o) y[o] = has_bias ? p.weight("bias").data[o] : T(0);
    const T* xi = in.data().data() + b * len;
    for (std::size_t i = 0; i < len; ++i) {
      const T v = xi[i];
      const T* wr = kernel.data.data() + i * out_len;
      for (std::size_t o = 0; o < out_len; ++o) y[o] += v * wr[o];
    }
  }

  LayerParams<T>* params = &p;
  auto backward = [x, params, n, len, out_len](Tape<T>& t, std::size_t self) {
    const auto& dy = t.grad(Var{self});
    const auto& xin = t.value(x);
    if (params->trainable) {
      auto& dk = params->grad("kernel").data;
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t i = 0; i < len; ++i) {
          const T v = xin[b * len + i];
          for (std::size_t o = 0; o < out_len; ++o) dk[i * out_len + o] += v * dy[b * out_len + o];
        }
      if (params->has("bias")) {
        auto& db = params->grad("bias").data;
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t o = 0; o < out_len; ++o) db[o] += dy[b * out_len + o];
      }
    }
    if (t.needs_grad(x)) {
      const auto& k = params->weight("kernel").data;
      auto& dx = t.grad(x);
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t i = 0; i < len; ++i) {
          T acc = 0;
          for (std::size_t o = 0; o < out_len; ++o) acc += k[i * out_len + o] * dy[b * out_len + o];
          dx[b * len + i] += acc;
        }
    }
  };
  return tape.record("dense", std::move(out), {x}, backward, p.trainable);
}

template <typename T>
Var relu(Tape<T>& tape, Var x) {
  const auto& in = tape.value(x);
  Grid4<T> out(in.shape());
  std::uint64_t sig = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const T v = in[i];
    // NaN stays NaN.
    out[i] = (v > T(0) || std::isnan(v)) ? v : T(0);
    if (v > T(0)) sig = mix(sig, i);
  }
  auto backward = [x](Tape<T>& t, std::size_t self) {
    const auto& d = t.grad(Var{self});
    const auto& xin = t.value(x);
    auto& dx = t.grad(x);
    for (std::size_t i = 0; i < d.size(); ++i)
      if (xin[i] > T(0)) dx[i] += d[i];
  };
  return tape.record("relu", std::move(out), {x}, backward, false, sig);
}

template <typename T>
Var max_pool2(Tape<T>& tape, Var x) {
  const auto& in = tape.value(x);
  if (in.h() % 2 != 0 || in.w() % 2 != 0)
    throw ShapeError("max_pool2: spatial dims must be even, got " + in.shape().str());
  const std::size_t oh = in.h() / 2, ow = in.w() / 2, c = in.c();
  Grid4<T> out({in.n(), oh, ow, c});
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  std::uint64_t sig = 0;
  for (std::size_t b = 0; b < in.n(); ++b)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xo = 0; xo < ow; ++xo)
        for (std::size_t ch = 0; ch < c; ++ch) {
          std::size_t best = in.index(b, 2 * y, 2 * xo, ch);
          for (std::size_t dy = 0; dy < 2; ++dy)
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t idx = in.index(b, 2 * y + dy, 2 * xo + dx, ch);
              if (std::isnan(in[best])) continue;
              if (std::isnan(in[idx]) || in[idx] > in[best]) best = idx;
            }
          const std::size_t o = out.index(b, y, xo, ch);
          out[o] = in[best];
          (*argmax)[o] = best;
          sig = mix(sig, best);
        }
  auto backward = [x, argmax](Tape<T>& t, std::size_t self) {
    const auto& d = t.grad(Var{self});
    auto& dx = t.grad(x);
    for (std::size_t o = 0; o < d.size(); ++o) dx[(*argmax)[o]] += d[o];
  };
  return tape.record("max_pool2", std::move(out), {x}, backward, false, sig);
}

template <typename T>
Grid4<T> bilinear(const Grid4<T>& x, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0) throw ShapeError("bilinear_resize: target dims must be >= 1");
  Grid4<T> out({x.n(), out_h, out_w, x.c()});
  kernels::bilinear_forward<T>(x.n(), x.h(), x.w(), x.c(), out_h, out_w, x.data(), out.data());
  return out;
}

template <typename T>
Var bilinear_resize(Tape<T>& tape, Var x, std::size_t out_h, std::size_t out_w) {
  const auto& in = tape.value(x);
  Grid4<T> out = bilinear(in, out_h, out_w);
  const Shape4 s = in.shape();
  auto backward = [x, s, out_h, out_w](Tape<T>& t, std::size_t self) {
    if (!t.needs_grad(x)) return;
    std::vector<T> d_in(s.size());
    kernels::bilinear_backward<T>(s.n, s.h, s.w, s.c, out_h, out_w, t.grad(Var{self}).data(), d_in);
    t.accumulate_grad(x, d_in);
  };
  return tape.record("bilinear_resize", std::move(out), {x}, backward);
}

template <typename T>
Grid4<T> pixel_shuffle(const Grid4<T>& x, std::size_t r) {
  if (r == 0 || x.c() % (r * r) != 0)
    throw ShapeError("pixel_shuffle: channels " + std::to_string(x.c()) + " not divisible by r^2 = " +
                     std::to_string(r * r));
  const std::size_t co = x.c() / (r * r);
  Grid4<T> out({x.n(), x.h() * r, x.w() * r, co});
  for (std::size_t b = 0; b < x.n(); ++b)
    for (std::size_t i = 0; i < x.h(); ++i)
      for (std::size_t j = 0; j < x.w(); ++j)
        for (std::size_t k = 0; k < co; ++k)
          for (std::size_t a = 0; a < r; ++a)
            for (std::size_t bb = 0; bb < r; ++bb)
              out.at(b, i * r + a, j * r + bb, k) = x.at(b, i, j, k * r * r + a * r + bb);
  return out;
}

template <typename T>
Grid4<T> space_to_depth(const Grid4<T>& x, std::size_t r) {
  if (r == 0 || x.h() % r != 0 || x.w() % r != 0)
    throw ShapeError("space_to_depth: spatial dims " + x.shape().str() + " not divisible by " + std::to_string(r));
  const std::size_t ci = x.c();
  Grid4<T> out({x.n(), x.h() / r, x.w() / r, ci * r * r});
  for (std::size_t b = 0; b < x.n(); ++b)
    for (std::size_t i = 0; i < out.h(); ++i)
      for (std::size_t j = 0; j < out.w(); ++j)
        for (std::size_t k = 0; k < ci; ++k)
          for (std::size_t a = 0; a < r; ++a)
            for (std::size_t bb = 0; bb < r; ++bb)
              out.at(b, i, j, k * r * r + a * r + bb) = x.at(b, i * r + a, j * r + bb, k);
  return out;
}

template <typename T>
Var pixel_shuffle(Tape<T>& tape, Var x, std::size_t r) {
  Grid4<T> out = pixel_shuffle(tape.value(x), r);
  auto backward = [x, r](Tape<T>& t, std::size_t self) {
    t.accumulate_grad(x, space_to_depth(t.grad(Var{self}), r).data());
  };
  return tape.record("pixel_shuffle", std::move(out), {x}, backward);
}

template <typename T>
Var space_to_depth(Tape<T>& tape, Var x, std::size_t r) {
  Grid4<T> out = space_to_depth(tape.value(x), r);
  auto backward = [x, r](Tape<T>& t, std::size_t self) {
    t.accumulate_grad(x, pixel_shuffle(t.grad(Var{self}), r).data());
  };
  return tape.record("space_to_depth", std::move(out), {x}, backward);
}

template <typename T>
Var concat_channels(Tape<T>& tape, Var a, Var b) {
  const auto& ga = tape.value(a);
  const auto& gb = tape.value(b);
  if (ga.n() != gb.n() || ga.h() != gb.h() || ga.w() != gb.w())
    throw ShapeError("concat_channels: spatial mismatch " + ga.shape().str() + " vs " + gb.shape().str());
  const std::size_t ca = ga.c(), cb = gb.c(), c = ca + cb;
  const std::size_t pixels = ga.n() * ga.h() * ga.w();
  Grid4<T> out({ga.n(), ga.h(), ga.w(), c});
  for (std::size_t p = 0; p < pixels; ++p) {
    for (std::size_t k = 0; k < ca; ++k) out[p * c + k] = ga[p * ca + k];
    for (std::size_t k = 0; k < cb; ++k) out[p * c + ca + k] = gb[p * cb + k];
  }
  auto backward = [a, b, ca, cb, pixels](Tape<T>& t, std::size_t self) {
    const auto& d = t.grad(Var{self});
    const std::size_t c = ca + cb;
    if (t.needs_grad(a)) {
      auto& da = t.grad(a);
      for (std::size_t p = 0; p < pixels; ++p)
        for (std::size_t k = 0; k < ca; ++k) da[p * ca + k] += d[p * c + k];
    }
    if (t.needs_grad(b)) {
      auto& db = t.grad(b);
      for (std::size_t p = 0; p < pixels; ++p)
        for (std::size_t k = 0; k < cb; ++k) db[p * cb + k] += d[p * c + ca + k];
    }
  };
  return tape.record("concat_channels", std::move(out), {a, b}, backward);
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  const auto& ga = tape.value(a);
  const auto& gb = tape.value(b);
  require_same_shape(ga.shape(), gb.shape(), "add_elementwise");
  Grid4<T> out(ga.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ga[i] + gb[i];
  auto backward = [a, b](Tape<T>& t, std::size_t self) {
    const auto d = t.grad(Var{self}).data();
    if (t.needs_grad(a)) t.accumulate_grad(a, d);
    if (t.needs_grad(b)) t.accumulate_grad(b, d);
  };
  return tape.record("add", std::move(out), {a, b}, backward);
}

template <typename T>
Var reshape(Tape<T>& tape, Var x, Shape4 shape) {
  Grid4<T> out = tape.value(x).reshaped(shape);
  auto backward = [x](Tape<T>& t, std::size_t self) { t.accumulate_grad(x, t.grad(Var{self}).data()); };
  return tape.record("reshape", std::move(out), {x}, backward);
}

template <typename T>
Var dropout(Tape<T>& tape, Var x, double rate) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must lie in [0, 1)");
  const auto& in = tape.value(x);
  if (tape.mode() == Mode::infer || rate == 0.0) {
    auto backward = [x](Tape<T>& t, std::size_t self) { t.accumulate_grad(x, t.grad(Var{self}).data()); };
    return tape.record("dropout", in, {x}, backward);
  }
  auto scale = std::make_shared<std::vector<T>>(in.size());
  std::bernoulli_distribution keep(1.0 - rate);
  const T inv = static_cast<T>(1.0 / (1.0 - rate));
  Grid4<T> out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) {
    (*scale)[i] = keep(tape.rng()) ? inv : T(0);
    out[i] = in[i] * (*scale)[i];
  }
  auto backward = [x, scale](Tape<T>& t, std::size_t self) {
    const auto& d = t.grad(Var{self});
    auto& dx = t.grad(x);
    for (std::size_t i = 0; i < d.size(); ++i) dx[i] += d[i] * (*scale)[i];
  };
  return tape.record("dropout", std::move(out), {x}, backward);
}

template <typename T>
Var masked_mse(Tape<T>& tape, Var pred, const Grid4<T>& truth) {
  const auto& p = tape.value(pred);
  require_same_shape(p.shape(), truth.shape(), "masked_mse");
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(truth[i])) continue;
    const double d = static_cast<double>(p[i]) - static_cast<double>(truth[i]);
    sum += d * d;
    ++count;
  }
  Grid4<T> out({1, 1, 1, 1}, count == 0 ? T(0) : static_cast<T>(sum / static_cast<double>(count)));
  auto target = std::make_shared<Grid4<T>>(truth);
  auto backward = [pred, target, count](Tape<T>& t, std::size_t self) {
    if (count == 0) return;
    const T upstream = t.grad(Var{self})[0];
    const auto& pv = t.value(pred);
    auto& dp = t.grad(pred);
    const T k = static_cast<T>(2.0 / static_cast<double>(count)) * upstream;
    for (std::size_t i = 0; i < pv.size(); ++i)
      if (std::isfinite((*target)[i])) dp[i] += k * (pv[i] - (*target)[i]);
  };
  return tape.record("masked_mse", std::move(out), {pred}, backward);
}

template <typename T>
Var weighted_sum(Tape<T>& tape, Var x, const Grid4<T>& weights) {
  const auto& in = tape.value(x);
  require_same_shape(in.shape(), weights.shape(), "weighted_sum");
  T acc = 0;
  for (std::size_t i = 0; i < in.size(); ++i) acc += in[i] * weights[i];
  auto w = std::make_shared<Grid4<T>>(weights);
  auto backward = [x, w](Tape<T>& t, std::size_t self) {
    const T upstream = t.grad(Var{self})[0];
    auto& dx = t.grad(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += upstream * (*w)[i];
  };
  return tape.record("weighted_sum", Grid4<T>({1, 1, 1, 1}, acc), {x}, backward);
}

#define SDOWN_OPS(T)                                                                        \
  template Var conv2d<T>(Tape<T>&, Var, LayerParams<T>&, Padding);                          \
  template Var dense<T>(Tape<T>&, Var, LayerParams<T>&);                                    \
  template Var relu<T>(Tape<T>&, Var);                                                      \
  template Var max_pool2<T>(Tape<T>&, Var);                                                 \
  template Var bilinear_resize<T>(Tape<T>&, Var, std::size_t, std::size_t);                 \
  template Var pixel_shuffle<T>(Tape<T>&, Var, std::size_t);                                \
  template Var space_to_depth<T>(Tape<T>&, Var, std::size_t);                               \
  template Var concat_channels<T>(Tape<T>&, Var, Var);                                      \
  template Var add<T>(Tape<T>&, Var, Var);                                                  \
  template Var reshape<T>(Tape<T>&, Var, Shape4);                                           \
  template Var dropout<T>(Tape<T>&, Var, double);                                           \
  template Var masked_mse<T>(Tape<T>&, Var, const Grid4<T>&);                               \
  template Var weighted_sum<T>(Tape<T>&, Var, const Grid4<T>&);                             \
  template Grid4<T> bilinear<T>(const Grid4<T>&, std::size_t, std::size_t);                 \
  template Grid4<T> pixel_shuffle<T>(const Grid4<T>&, std::size_t);                         \
  template Grid4<T> space_to_depth<T>(const Grid4<T>&, std::size_t);

SDOWN_OPS(float)
SDOWN_OPS(double)

}  // namespace sdown::ops
