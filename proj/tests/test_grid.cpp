#include <doctest.h>

#include <cmath>

#include "sdown/grid.hpp"
#include "sdown/ops.hpp"
#include "sdown/params.hpp"
#include "sdown/tape.hpp"
#include "test_util.hpp"

using namespace sdown;

TEST_CASE("grid buffer length matches dims") {
  Grid4<float> g({2, 3, 4, 5}, 1.5f);
  CHECK(g.size() == 120);
  CHECK(g.shape().str() == "(2,3,4,5)");
  CHECK(g.at(1, 2, 3, 4) == 1.5f);
  CHECK(g.index(1, 2, 3, 4) == 119);
}

TEST_CASE("grid rejects zero spatial or batch dims and mismatched buffers") {
  CHECK_THROWS_AS(Grid4<float>({0, 2, 2, 1}), ShapeError);
  CHECK_THROWS_AS(Grid4<float>({1, 0, 2, 1}), ShapeError);
  CHECK_THROWS_AS(Grid4<float>({1, 2, 2, 1}, std::vector<float>(3)), ShapeError);
  // Zero channels is an empty grid, used as the neutral element of concat.
  Grid4<float> empty({1, 2, 2, 0});
  CHECK(empty.size() == 0);
}

TEST_CASE("reshape keeps the buffer and slice copies batch items") {
  auto g = test::ramp<float>({3, 2, 2, 1});
  auto r = g.reshaped({3, 1, 1, 4});
  CHECK(r.vec() == g.vec());
  CHECK_THROWS_AS(g.reshaped({3, 2, 2, 2}), ShapeError);
  auto s = g.slice_batch(1, 2);
  CHECK(s.n() == 2);
  CHECK(s[0] == 5.0f);
  CHECK_THROWS_AS(g.slice_batch(2, 2), ShapeError);
}

TEST_CASE("NaN is an ordinary value of the grid") {
  Grid4<float> g({1, 1, 2, 1});
  g[1] = std::nanf("");
  CHECK(std::isnan(g.cast<double>()[1]));
}

TEST_CASE("layer params: grads mirror weights and zero_grad clears them") {
  Rng rng(3);
  auto p = make_conv<double>("c", 3, 3, 2, 4, rng);
  CHECK(p.weight("kernel").shape == std::vector<std::size_t>{3, 3, 2, 4});
  CHECK(p.weight("bias").shape == std::vector<std::size_t>{4});
  for (const auto& [role, w] : p.weights) CHECK(p.grads.at(role).shape == w.shape);
  for (auto& [role, g] : p.grads)
    for (auto& v : g.data) v = 1.0;
  p.zero_grad();
  for (const auto& [role, g] : p.grads)
    for (double v : g.data) CHECK(v == 0.0);
  CHECK(p.count() == 3 * 3 * 2 * 4 + 4);
}

TEST_CASE("initialisation is uniform within 1/sqrt(fan_in) with zero bias") {
  Rng rng(11);
  auto p = make_conv<double>("c", 3, 3, 4, 8, rng);
  const double bound = 1.0 / std::sqrt(36.0);
  double max_abs = 0;
  for (double v : p.weight("kernel").data) max_abs = std::max(max_abs, std::abs(v));
  CHECK(max_abs <= bound);
  CHECK(max_abs > 0.8 * bound);
  for (double v : p.weight("bias").data) CHECK(v == 0.0);

  Rng a(5), b(5);
  auto f = make_dense<float>("d", 6, 3, a);
  auto d = make_dense<double>("d", 6, 3, b);
  for (std::size_t i = 0; i < d.weight("kernel").size(); ++i)
    CHECK(f.weight("kernel").data[i] == static_cast<float>(d.weight("kernel").data[i]));
}

TEST_CASE("param set cast preserves layout") {
  Rng rng(1);
  ParamSet<double> ps;
  ps.add(make_conv<double>("a", 3, 3, 1, 2, rng));
  ps.add(make_dense<double>("b", 4, 2, rng));
  auto pf = ps.cast<float>();
  REQUIRE(pf.size() == 2);
  CHECK(pf[1].name == "b");
  CHECK(pf.count() == ps.count());
}

TEST_CASE("tape backward visits nodes in exact reverse creation order") {
  Tape<double> tape;
  Rng rng(2);
  auto conv = make_conv<double>("c", 3, 3, 1, 2, rng);
  auto x = tape.leaf(test::random_grid({1, 4, 4, 1}, 1), true);
  auto a = ops::conv2d(tape, x, conv);
  auto b = ops::relu(tape, a);
  auto c = ops::max_pool2(tape, b);
  auto d = ops::bilinear_resize(tape, c, 4, 4);
  auto e = ops::add(tape, d, a);
  Grid4<double> truth({1, 4, 4, 2}, 0.0);
  auto loss = ops::masked_mse(tape, e, truth);
  tape.backward(loss);
  const std::vector<std::string> expected{tape.op(loss), tape.op(e), tape.op(d), tape.op(c), tape.op(b), tape.op(a)};
  CHECK(tape.backward_trace() == expected);
}

TEST_CASE("nodes without trainable ancestors are skipped by backward") {
  Tape<double> tape;
  auto x = tape.leaf(test::random_grid({1, 2, 2, 1}, 1), false);
  auto y = ops::relu(tape, x);
  CHECK_FALSE(tape.needs_grad(y));
  auto w = tape.leaf(test::random_grid({1, 2, 2, 1}, 2), true);
  auto z = ops::add(tape, y, w);
  CHECK(tape.needs_grad(z));
  tape.backward(ops::weighted_sum(tape, z, Grid4<double>({1, 2, 2, 1}, 1.0)));
  CHECK_FALSE(tape.has_grad(x));
  CHECK(tape.grad(w)[0] == doctest::Approx(1.0));
}
