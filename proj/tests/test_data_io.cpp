#include <doctest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <unistd.h>

#include "sdown/data_io.hpp"
#include "sdown/synth.hpp"

using namespace sdown;

namespace {

std::vector<std::int64_t> iota_times(std::size_t n, std::int64_t first = 1) {
  std::vector<std::int64_t> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = first + static_cast<std::int64_t>(i);
  return t;
}

GridSeries random_series(std::size_t h, std::size_t w, std::size_t steps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-100, 100);
  GridSeries s(h, w, iota_times(steps));
  for (auto& v : s.data) v = u(rng);
  return s;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("sdown_test_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST_CASE("grid file round trip is bit-exact including NaN and infinities") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto s = random_series(1 + seed % 5, 1 + seed % 7, seed % 4, seed);
    std::mt19937_64 rng(seed);
    for (auto& v : s.data)
      if (rng() % 5 == 0) v = std::numeric_limits<float>::quiet_NaN();
    if (!s.data.empty()) s.data[0] = -std::numeric_limits<float>::infinity();
    for (auto& t : s.times) t = t * 1000 - 5000000000LL;
    std::stringstream buf;
    write_grid(buf, s);
    const auto r = read_grid(buf);
    CHECK(r.h == s.h);
    CHECK(r.w == s.w);
    CHECK(r.times == s.times);
    REQUIRE(r.data.size() == s.data.size());
    for (std::size_t i = 0; i < s.data.size(); ++i)
      CHECK(std::bit_cast<std::uint32_t>(r.data[i]) == std::bit_cast<std::uint32_t>(s.data[i]));
  }
}

TEST_CASE("grid file layout and corruption") {
  GridSeries s(2, 3, {7});
  s.data = {1, 2, 3, 4, 5, 6};
  std::stringstream buf;
  write_grid(buf, s);
  const std::string bytes = buf.str();
  CHECK(bytes.size() == 4 + 2 + 12 + 8 + 24);
  CHECK(bytes.substr(0, 4) == "SDG1");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);
  CHECK(static_cast<unsigned char>(bytes[6]) == 2);
  CHECK(static_cast<unsigned char>(bytes[10]) == 3);

  std::stringstream bad_magic(std::string("XXXX") + bytes.substr(4));
  CHECK_THROWS_AS(read_grid(bad_magic), FormatError);
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_grid(truncated), FormatError);

  const auto path = temp_path("grid.sdg");
  write_grid_file(path, s);
  CHECK(read_grid_file(path).data == s.data);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_grid_file(path), FormatError);
}

TEST_CASE("csv import fills absent cells with NaN") {
  const auto path = temp_path("grid.csv");
  {
    std::ofstream out(path);
    out << "t,row,col,value\n5,0,0,1.5\n5,1,1,2\n9,0,1,NA\n9,1,0,-3\n";
  }
  const auto s = read_grid_csv(path);
  CHECK(s.h == 2);
  CHECK(s.w == 2);
  CHECK(s.times == std::vector<std::int64_t>{5, 9});
  CHECK(s.at(0, 0, 0) == 1.5f);
  CHECK(s.at(0, 1, 1) == 2.0f);
  CHECK(std::isnan(s.at(0, 0, 1)));
  CHECK(std::isnan(s.at(1, 0, 1)));
  CHECK(s.at(1, 1, 0) == -3.0f);
  {
    std::ofstream out(path);
    out << "t,row,col,value\n1,0,0,1\n1,x\n";
  }
  CHECK_THROWS_AS(read_grid_csv(path), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("block coarsening examples") {
  GridSeries ones(4, 4, {1}, 1.0f);
  CHECK(block_coarsen(ones, 4).data == std::vector<float>{1.0f});
  GridSeries b(2, 2, {1});
  b.data = {1, 2, 3, 4};
  CHECK(block_coarsen(b, 2).data == std::vector<float>{2.5f});
  const auto big = block_coarsen(GridSeries(120, 120, {1, 2}), 4);
  CHECK(big.h == 30);
  CHECK(big.w == 30);
  CHECK(big.steps() == 2);
  CHECK_THROWS_AS(block_coarsen(GridSeries(6, 8, {1}), 4), ShapeError);
  CHECK_THROWS_AS(block_coarsen(GridSeries(4, 4, {1}), 0), ShapeError);
}

TEST_CASE("block coarsening averages finite members only") {
  const float nan = std::numeric_limits<float>::quiet_NaN();
  GridSeries s(2, 4, {1});
  s.data = {1, nan, nan, nan, 3, nan, nan, nan};
  const auto c = block_coarsen(s, 2);
  CHECK(c.data[0] == 2.0f);
  CHECK(std::isnan(c.data[1]));
}

TEST_CASE("block coarsening is linear and preserves constants") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::size_t> blocks(1, 4), factor(1, 4), steps(1, 3);
  std::uniform_real_distribution<double> coef(-3, 3);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t s = factor(rng), h = blocks(rng) * s, w = blocks(rng) * s, n = steps(rng);
    const auto x = random_series(h, w, n, rng()), y = random_series(h, w, n, rng());
    const double a = coef(rng), b = coef(rng);
    GridSeries mix(h, w, x.times);
    for (std::size_t i = 0; i < mix.data.size(); ++i)
      mix.data[i] = static_cast<float>(a * x.data[i] + b * y.data[i]);
    const auto cm = block_coarsen(mix, s), cx = block_coarsen(x, s), cy = block_coarsen(y, s);
    for (std::size_t i = 0; i < cm.data.size(); ++i)
      CHECK(std::abs(cm.data[i] - (a * cx.data[i] + b * cy.data[i])) < 1e-3);

    const float k = static_cast<float>(coef(rng));
    const auto cc = block_coarsen(GridSeries(h, w, x.times, k), s);
    for (float v : cc.data) CHECK(v == doctest::Approx(k).epsilon(1e-6));
  }
}

TEST_CASE("split by time") {
  const auto s = random_series(3, 2, 2191, 1);
  const auto [train, test] = split_by_time(s, 200);
  CHECK(train.steps() == 1991);
  CHECK(test.steps() == 200);
  CHECK(test.times.front() == 1992);
  const auto [one, rest] = split_by_time(s, 2190);
  CHECK(one.steps() == 1);
  const auto joined = concat_time(train, test);
  CHECK(joined.times == s.times);
  CHECK(joined.data == s.data);
  CHECK_THROWS_AS(split_by_time(s, 0), ConfigError);
  CHECK_THROWS_AS(split_by_time(s, 2191), ConfigError);

  DatasetPair d{block_coarsen(random_series(4, 4, 10, 2), 2), random_series(4, 4, 10, 2), "ug/m3"};
  d.coarse = block_coarsen(d.fine, 2);
  const auto [dtr, dte] = split_by_time(d, 3);
  CHECK(dtr.coarse.steps() == 7);
  CHECK(dte.fine.steps() == 3);
  CHECK(dte.units == "ug/m3");
}

TEST_CASE("dataset pair and series validation") {
  DatasetPair d{GridSeries(2, 2, {1, 2}), GridSeries(8, 8, {1, 2}), ""};
  CHECK_NOTHROW(d.validate());
  CHECK(d.block_factor() == 4);
  d.fine = GridSeries(8, 6, {1, 2});
  CHECK_THROWS_AS(d.validate(), ShapeError);
  d.fine = GridSeries(8, 8, {1, 3});
  CHECK_THROWS_AS(d.validate(), ShapeError);
  GridSeries backwards(1, 1, {3, 2});
  CHECK_THROWS_AS(backwards.validate(), ShapeError);
}

TEST_CASE("synthetic field: determinism and exact periodicity without noise or trend") {
  SynthConfig c;
  c.steps = 60;
  c.h = c.w = 8;
  c.season_period = 20;
  CHECK(synth_generate(c).data == synth_generate(c).data);
  auto other = c;
  other.seed = 2;
  CHECK(synth_generate(other).data != synth_generate(c).data);

  c.noise_amplitude = 0;
  c.trend = 0;
  const auto s = synth_generate(c);
  for (std::size_t k = 0; k + 20 < 60; ++k)
    for (std::size_t p = 0; p < 64; ++p) CHECK(s.data[k * 64 + p] == s.data[(k + 20) * 64 + p]);
}

TEST_CASE("synthetic field: closed form without noise") {
  SynthConfig c;
  c.h = c.w = 8;
  c.steps = 10;
  c.season_period = 7;
  c.noise_amplitude = 0;
  const auto s = synth_generate(c);
  const auto f = synth_patterns(c);
  for (std::size_t k = 0; k < c.steps; ++k) {
    const double t = static_cast<double>(k + 1);
    const double ph = 2 * std::numbers::pi * t / c.season_period;
    for (std::size_t p = 0; p < 64; ++p) {
      const double v = c.base_level + c.static_amplitude * f.static_pattern[p] +
                       c.seasonal_amplitude * std::sin(ph) * f.seasonal_pattern[p] +
                       c.detail_amplitude * std::cos(ph) * f.detail_pattern[p] + c.trend * (t - 1) / 10.0;
      CHECK(s.data[k * 64 + p] == doctest::Approx(v).epsilon(1e-6));
    }
  }
  // The detail texture vanishes under coarsening by its block size.
  GridSeries d(8, 8, {1});
  for (std::size_t p = 0; p < 64; ++p) d.data[p] = static_cast<float>(f.detail_pattern[p]);
  for (float v : block_coarsen(d, c.detail_block).data) CHECK(std::abs(v) < 1e-6);
}

TEST_CASE("synthetic field: Monte Carlo mean within 3 standard errors of the base level") {
  SynthConfig c;
  c.h = c.w = 12;
  c.steps = 2000;
  c.static_amplitude = c.seasonal_amplitude = c.detail_amplitude = c.trend = 0;
  c.noise_amplitude = 2.5;
  c.base_level = 17;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    c.seed = seed;
    const auto s = synth_generate(c);
    // Steps are independent; pixels within a step are correlated, so use per-step means.
    std::vector<double> step_mean(c.steps, 0.0);
    for (std::size_t k = 0; k < c.steps; ++k) {
      for (std::size_t p = 0; p < 144; ++p) step_mean[k] += s.data[k * 144 + p];
      step_mean[k] /= 144.0;
    }
    double m = 0, v = 0;
    for (double x : step_mean) m += x;
    m /= static_cast<double>(c.steps);
    for (double x : step_mean) v += (x - m) * (x - m);
    const double se = std::sqrt(v / static_cast<double>(c.steps - 1) / static_cast<double>(c.steps));
    CHECK(std::abs(m - c.base_level) < 3 * se);
    // Per-pixel standard deviation is the noise amplitude.
    double pv = 0;
    for (std::size_t k = 0; k < c.steps; ++k) pv += (s.data[k * 144 + 77] - 17.0) * (s.data[k * 144 + 77] - 17.0);
    CHECK(std::sqrt(pv / static_cast<double>(c.steps)) == doctest::Approx(2.5).epsilon(0.05));
  }
}
