#include <doctest.h>

#include <cmath>

#include "sdown/gradcheck.hpp"
#include "sdown/ops.hpp"
#include "sdown/srdrn.hpp"
#include "sdown/temporal_module.hpp"
#include "sdown/unet.hpp"
#include "test_util.hpp"

using namespace sdown;

namespace {

ParamSet<double> single(LayerParams<double> p, std::uint64_t seed) {
  test::randomize(p, seed, 0.5);
  ParamSet<double> ps;
  ps.add(std::move(p));
  return ps;
}

LayerParams<double> conv(std::size_t k, std::size_t cin, std::size_t cout) {
  Rng rng(1);
  return make_conv<double>("conv", k, k, cin, cout, rng);
}

void require_pass(const GradCheckReport& r, double tol = 1e-4) {
  INFO(r.worst);
  INFO(r.diagnostic);
  CHECK(r.finite);
  CHECK(r.checked > 0);
  CHECK(r.max_rel_error < tol);
}

}  // namespace

TEST_CASE("grad check: single conv2d") {
  auto ps = single(conv(3, 2, 3), 1);
  auto r = grad_check([&](Tape<double>& t, Var x) { return ops::conv2d(t, x, ps[0]); },
                      test::random_grid({2, 4, 5, 2}, 2), &ps);
  require_pass(r);
  CHECK(r.param_elements == 3 * 3 * 2 * 3 + 3);
  CHECK(r.input_elements == 2 * 4 * 5 * 2);
}

TEST_CASE("grad check: conv2d with valid padding and even kernels") {
  auto ps = single(conv(2, 3, 2), 3);
  require_pass(grad_check([&](Tape<double>& t, Var x) { return ops::conv2d(t, x, ps[0], ops::Padding::valid); },
                          test::random_grid({1, 4, 4, 3}, 4), &ps));
  auto ps4 = single(conv(4, 1, 2), 5);
  require_pass(grad_check([&](Tape<double>& t, Var x) { return ops::conv2d(t, x, ps4[0]); },
                          test::random_grid({1, 5, 5, 1}, 6), &ps4));
}

TEST_CASE("grad check: relu away from zero is exact to 1e-6") {
  auto x = test::random_grid({1, 3, 4, 2}, 9);
  for (auto& v : x.vec()) v = v < 0 ? v - 0.1 : v + 0.1;
  auto r = grad_check([](Tape<double>& t, Var v) { return ops::relu(t, v); }, x, nullptr);
  require_pass(r, 1e-6);
  CHECK(r.skipped_kinks == 0);
}

TEST_CASE("grad check: frozen parameters leave only the input") {
  auto ps = single(conv(3, 1, 2), 1);
  ps[0].trainable = false;
  auto r = grad_check([&](Tape<double>& t, Var x) { return ops::conv2d(t, x, ps[0]); },
                      test::random_grid({1, 4, 4, 1}, 3), &ps);
  require_pass(r);
  CHECK(r.param_elements == 0);
  CHECK(r.input_elements == 16);
}

TEST_CASE("grad check: dense") {
  Rng rng(2);
  auto ps = single(make_dense<double>("dense", 6, 4, rng), 2);
  require_pass(grad_check([&](Tape<double>& t, Var x) { return ops::dense(t, x, ps[0]); },
                          test::random_grid({3, 1, 2, 3}, 1), &ps));
}

TEST_CASE("grad check: max_pool2 skips only tie-crossing probes") {
  // Continuous random inputs have no ties, so every probe counts.
  auto r = grad_check([](Tape<double>& t, Var x) { return ops::max_pool2(t, x); }, test::random_grid({2, 4, 6, 2}, 5),
                      nullptr);
  require_pass(r);
}

TEST_CASE("grad check: bilinear resize up and down") {
  require_pass(grad_check([](Tape<double>& t, Var x) { return ops::bilinear_resize(t, x, 7, 9); },
                          test::random_grid({1, 3, 4, 2}, 1), nullptr));
  require_pass(grad_check([](Tape<double>& t, Var x) { return ops::bilinear_resize(t, x, 2, 3); },
                          test::random_grid({2, 5, 6, 1}, 2), nullptr));
}

TEST_CASE("grad check: pixel shuffle and space to depth") {
  require_pass(grad_check([](Tape<double>& t, Var x) { return ops::pixel_shuffle(t, x, 2); },
                          test::random_grid({1, 2, 3, 8}, 1), nullptr));
  require_pass(grad_check([](Tape<double>& t, Var x) { return ops::space_to_depth(t, x, 2); },
                          test::random_grid({1, 4, 6, 1}, 2), nullptr));
}

TEST_CASE("grad check: concat, add, reshape") {
  auto ps = single(conv(3, 2, 3), 7);
  require_pass(grad_check(
      [&](Tape<double>& t, Var x) {
        auto y = ops::conv2d(t, x, ps[0]);
        auto c = ops::concat_channels(t, x, y);
        auto s = ops::add(t, c, c);
        return ops::reshape(t, s, {2, 1, 1, 3 * 3 * 5});
      },
      test::random_grid({2, 3, 3, 2}, 8), &ps));
}

TEST_CASE("grad check: dropout in training mode with a fixed mask") {
  GradCheckOptions o;
  o.mode = Mode::train;
  require_pass(grad_check([](Tape<double>& t, Var x) { return ops::dropout(t, x, 0.4); },
                          test::random_grid({1, 4, 4, 3}, 1), nullptr, o));
}

TEST_CASE("grad check: masked mse ignores missing truth") {
  auto truth = test::random_grid({1, 3, 3, 1}, 4);
  truth[2] = std::nan("");
  truth[5] = std::nan("");
  require_pass(grad_check([&](Tape<double>& t, Var x) { return ops::masked_mse(t, x, truth); },
                          test::random_grid({1, 3, 3, 1}, 5), nullptr));
}

TEST_CASE("grad check: non-finite loss is reported") {
  auto x = test::random_grid({1, 2, 2, 1}, 1);
  x[0] = std::nan("");
  auto r = grad_check([](Tape<double>& t, Var v) { return ops::relu(t, v); }, x, nullptr);
  CHECK_FALSE(r.finite);
  CHECK_FALSE(r.passed);
  CHECK_FALSE(r.diagnostic.empty());
}

TEST_CASE("grad check: temporal module") {
  for (auto kind : {EncodingKind::sinusoidal, EncodingKind::rbf}) {
    TemporalModuleSpec spec;
    spec.encoding.kind = kind;
    spec.encoding.resolution_levels = {3, 5};
    spec.hidden_layers = {6};
    spec.cnn_filters = {2};
    spec.cnn_kernels = {{3, 3}};
    spec.fusion_h = 3;
    spec.fusion_w = 2;
    ParamSet<double> ps;
    Rng rng(4);
    TemporalModule<double> tm(spec, ps, rng, "tm");
    const std::vector<double> times{10, 100, 200};
    auto r = grad_check([&](Tape<double>& t, Var) { return tm.forward(t, ps, times); }, Grid4<double>({1, 1, 1, 1}),
                        &ps, [] {
                          GradCheckOptions o;
                          o.check_input = false;
                          return o;
                        }());
    require_pass(r);
  }
}

TEST_CASE("grad check: tiny time-aware SRDRN") {
  SrdrnSpec spec;
  spec.num_residual_blocks = 1;
  spec.res_block_filters = 4;
  spec.upscale_factor = 2;
  spec.upscaling_filters = {4};
  spec.coarse_h = 6;
  spec.coarse_w = 6;
  TemporalModuleSpec tm;
  tm.hidden_layers = {8};
  tm.cnn_filters = {2};
  tm.cnn_kernels = {{3, 3}};
  tm.encoding.resolution_levels = {3};
  spec.temporal = tm;
  Srdrn<double> net(spec);
  const std::vector<double> times{5, 180};
  require_pass(grad_check([&](Tape<double>& t, Var x) { return net.forward(t, x, times); },
                          test::random_grid({2, 6, 6, 1}, 3), &net.params()));
}
