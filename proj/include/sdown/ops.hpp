#pragma once

// Differentiable layer primitives. Each op computes its forward value and
// records a backward closure on the tape.

#include <cstddef>

#include "sdown/tape.hpp"

namespace sdown::ops {

enum class Padding { same, valid };

// Kernel (kh, kw, c_in, c_out) and optional bias (c_out) taken from `p`.
template <typename T>
Var conv2d(Tape<T>& tape, Var x, LayerParams<T>& p, Padding padding = Padding::same);

// Per batch item: y = kernel^T * flatten(x) + bias with kernel shape (in, out).
// Output shape (n, 1, 1, out).
template <typename T>
Var dense(Tape<T>& tape, Var x, LayerParams<T>& p);

template <typename T>
Var relu(Tape<T>& tape, Var x);

// 2x2 window, stride 2; gradient goes to the first maximum in row-major window order.
template <typename T>
Var max_pool2(Tape<T>& tape, Var x);

template <typename T>
Var bilinear_resize(Tape<T>& tape, Var x, std::size_t out_h, std::size_t out_w);

// out[i*r + a, j*r + b, k] = in[i, j, k*r*r + a*r + b]
template <typename T>
Var pixel_shuffle(Tape<T>& tape, Var x, std::size_t r);

// Exact inverse of pixel_shuffle.
template <typename T>
Var space_to_depth(Tape<T>& tape, Var x, std::size_t r);

// a's channels first.
template <typename T>
Var concat_channels(Tape<T>& tape, Var a, Var b);

template <typename T>
Var add(Tape<T>& tape, Var a, Var b);

template <typename T>
Var reshape(Tape<T>& tape, Var x, Shape4 shape);

// Inverted dropout: in train mode zeroes with probability `rate` and scales
// survivors by 1/(1-rate); identity in infer mode or when rate == 0.
template <typename T>
Var dropout(Tape<T>& tape, Var x, double rate);

// Mean squared error over elements where `truth` is finite. All-masked gives 0.
template <typename T>
Var masked_mse(Tape<T>& tape, Var pred, const Grid4<T>& truth);

// Scalar sum(x * weights); used to project outputs onto a scalar for gradient checks.
template <typename T>
Var weighted_sum(Tape<T>& tape, Var x, const Grid4<T>& weights);

// Forward-only NaN-free helpers operating directly on grids.
template <typename T>
Grid4<T> bilinear(const Grid4<T>& x, std::size_t out_h, std::size_t out_w);
template <typename T>
Grid4<T> pixel_shuffle(const Grid4<T>& x, std::size_t r);
template <typename T>
Grid4<T> space_to_depth(const Grid4<T>& x, std::size_t r);

}  // namespace sdown::ops
