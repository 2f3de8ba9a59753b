// Fast kernels against the serial reference loops, plus one training step.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "sdown/kernels.hpp"
#include "sdown/ops.hpp"
#include "sdown/srdrn.hpp"
#include "sdown/training.hpp"

using namespace sdown;
using kernels::ConvGeometry;

namespace {

std::vector<float> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1, 1);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// args: batch, size, c_in, c_out, kernel
ConvGeometry geometry(const benchmark::State& st) {
  const auto a = [&](int i) { return static_cast<std::size_t>(st.range(i)); };
  return ConvGeometry::same(a(0), a(1), a(1), a(2), a(4), a(4), a(3));
}

void set_flops(benchmark::State& st, const ConvGeometry& g) {
  const double flops = 2.0 * static_cast<double>(g.n * g.out_h * g.out_w * g.c_out * g.kh * g.kw * g.c_in);
  st.counters["GFLOP/s"] = benchmark::Counter(flops * 1e-9, benchmark::Counter::kIsIterationInvariantRate);
}

template <bool Fast>
void conv_forward(benchmark::State& st) {
  const auto g = geometry(st);
  const auto in = random_vec(g.n * g.h * g.w * g.c_in, 1), k = random_vec(g.kh * g.kw * g.c_in * g.c_out, 2),
             b = random_vec(g.c_out, 3);
  std::vector<float> out(g.n * g.out_h * g.out_w * g.c_out);
  for (auto _ : st) {
    if constexpr (Fast) kernels::conv2d_forward<float>(g, in, k, b, out);
    else kernels::reference::conv2d_forward<float>(g, in, k, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  set_flops(st, g);
}

template <bool Fast>
void conv_backward_input(benchmark::State& st) {
  const auto g = geometry(st);
  const auto d_out = random_vec(g.n * g.out_h * g.out_w * g.c_out, 1), k = random_vec(g.kh * g.kw * g.c_in * g.c_out, 2);
  std::vector<float> d_in(g.n * g.h * g.w * g.c_in);
  for (auto _ : st) {
    if constexpr (Fast) kernels::conv2d_backward_input<float>(g, d_out, k, d_in);
    else kernels::reference::conv2d_backward_input<float>(g, d_out, k, d_in);
    benchmark::DoNotOptimize(d_in.data());
  }
  set_flops(st, g);
}

template <bool Fast>
void conv_backward_params(benchmark::State& st) {
  const auto g = geometry(st);
  const auto in = random_vec(g.n * g.h * g.w * g.c_in, 1), d_out = random_vec(g.n * g.out_h * g.out_w * g.c_out, 2);
  std::vector<float> dk(g.kh * g.kw * g.c_in * g.c_out), db(g.c_out);
  for (auto _ : st) {
    if constexpr (Fast) kernels::conv2d_backward_params<float>(g, in, d_out, dk, db);
    else kernels::reference::conv2d_backward_params<float>(g, in, d_out, dk, db);
    benchmark::DoNotOptimize(dk.data());
  }
  set_flops(st, g);
}

template <bool Fast>
void bilinear(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0)), s = static_cast<std::size_t>(st.range(1)), c = std::size_t{8};
  const auto in = random_vec(n * s * s * c, 1);
  std::vector<float> out(n * 4 * s * 4 * s * c);
  for (auto _ : st) {
    if constexpr (Fast) kernels::bilinear_forward<float>(n, s, s, c, 4 * s, 4 * s, in, out);
    else kernels::reference::bilinear_forward<float>(n, s, s, c, 4 * s, 4 * s, in, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(out.size()));
}

// Forward, backward and Adam update of the desk-scale SRDRN on one batch of 16.
void srdrn_train_step(benchmark::State& st) {
  SrdrnSpec s;
  s.num_residual_blocks = 2;
  s.res_block_filters = 16;
  s.upscaling_filters = {16, 8};
  Srdrn<float> net(s);
  Grid4<float> x({16, 6, 6, 1}, random_vec(16 * 36, 1));
  Grid4<float> y({16, 24, 24, 1}, random_vec(16 * 576, 2));
  AdamState adam;
  for (auto _ : st) {
    Tape<float> tape(Mode::train, 1);
    const Var loss = ops::masked_mse(tape, net.forward(tape, tape.leaf(x), {}), y);
    net.params().zero_grad();
    tape.backward(loss);
    adam_step(net.params(), adam, {});
  }
}

// batch, size, c_in, c_out, kernel: case-study SRDRN body, desk SRDRN body, desk UNet level, 1x1
#define CONV_SHAPES                                                                                     \
  Args({4, 30, 64, 64, 3})->Args({16, 6, 16, 16, 3})->Args({16, 24, 8, 8, 3})->Args({16, 12, 16, 16, 3}) \
      ->Args({16, 24, 16, 8, 1})->Unit(benchmark::kMicrosecond)

BENCHMARK(conv_forward<true>)->CONV_SHAPES;
BENCHMARK(conv_forward<false>)->CONV_SHAPES;
BENCHMARK(conv_backward_input<true>)->CONV_SHAPES;
BENCHMARK(conv_backward_input<false>)->CONV_SHAPES;
BENCHMARK(conv_backward_params<true>)->CONV_SHAPES;
BENCHMARK(conv_backward_params<false>)->CONV_SHAPES;
BENCHMARK(bilinear<true>)->Args({16, 6})->Args({4, 30})->Unit(benchmark::kMicrosecond);
BENCHMARK(bilinear<false>)->Args({16, 6})->Args({4, 30})->Unit(benchmark::kMicrosecond);
BENCHMARK(srdrn_train_step)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
