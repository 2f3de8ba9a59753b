#include "sdown/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace sdown {

namespace {

std::vector<double> bumps(std::size_t h, std::size_t w, std::size_t count, double min_width, double max_width,
                          bool signed_amplitudes, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uy(0.0, static_cast<double>(h));
  std::uniform_real_distribution<double> ux(0.0, static_cast<double>(w));
  std::uniform_real_distribution<double> us(min_width, max_width);
  std::uniform_real_distribution<double> ua(0.5, 1.0);
  std::vector<double> field(h * w, 0.0);
  for (std::size_t k = 0; k < count; ++k) {
    const double cy = uy(rng), cx = ux(rng), s = us(rng);
    double a = ua(rng);
    if (signed_amplitudes && (rng() & 1u)) a = -a;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double dy = static_cast<double>(y) + 0.5 - cy, dx = static_cast<double>(x) + 0.5 - cx;
        field[y * w + x] += a * std::exp(-(dy * dy + dx * dx) / (2 * s * s));
      }
  }
  return field;
}

void normalise_max_abs(std::vector<double>& field) {
  double m = 0;
  for (double v : field) m = std::max(m, std::abs(v));
  if (m > 0)
    for (double& v : field) v /= m;
}

}  // namespace

SynthFields synth_patterns(const SynthConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  const double extent = static_cast<double>(std::min(cfg.h, cfg.w));
  SynthFields f;
  f.static_pattern = bumps(cfg.h, cfg.w, cfg.n_bumps, cfg.static_width_min * extent,
                           cfg.static_width_max * extent, true, rng);
  f.seasonal_pattern = bumps(cfg.h, cfg.w, std::max<std::size_t>(2, cfg.n_bumps / 2), 0.15 * extent, 0.35 * extent,
                             false, rng);
  f.detail_pattern = bumps(cfg.h, cfg.w, cfg.h * cfg.w / 8, 0.6, 1.2, true, rng);
  normalise_max_abs(f.static_pattern);
  normalise_max_abs(f.seasonal_pattern);

  const std::size_t s = cfg.detail_block;
  if (s > 1 && cfg.h % s == 0 && cfg.w % s == 0) {
    for (std::size_t by = 0; by < cfg.h / s; ++by)
      for (std::size_t bx = 0; bx < cfg.w / s; ++bx) {
        double mean = 0;
        for (std::size_t dy = 0; dy < s; ++dy)
          for (std::size_t dx = 0; dx < s; ++dx) mean += f.detail_pattern[(by * s + dy) * cfg.w + bx * s + dx];
        mean /= static_cast<double>(s * s);
        for (std::size_t dy = 0; dy < s; ++dy)
          for (std::size_t dx = 0; dx < s; ++dx) f.detail_pattern[(by * s + dy) * cfg.w + bx * s + dx] -= mean;
      }
  }
  normalise_max_abs(f.detail_pattern);
  return f;
}

GridSeries synth_generate(const SynthConfig& cfg) {
  if (cfg.h == 0 || cfg.w == 0 || cfg.steps == 0) throw ConfigError("synth: dims and steps must be >= 1");
  if (!(cfg.season_period > 0)) throw ConfigError("synth: season period must be > 0");
  const SynthFields f = synth_patterns(cfg);
  std::vector<std::int64_t> times(cfg.steps);
  for (std::size_t i = 0; i < cfg.steps; ++i) times[i] = static_cast<std::int64_t>(i + 1);
  GridSeries out(cfg.h, cfg.w, times);

  // Separable truncated Gaussian smoother; per-pixel normalisation keeps unit variance at the edges.
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3 * std::max(cfg.noise_length, 1e-9)));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  for (std::ptrdiff_t k = -radius; k <= radius; ++k)
    taps[static_cast<std::size_t>(k + radius)] =
        cfg.noise_length > 0 ? std::exp(-0.5 * static_cast<double>(k * k) / (cfg.noise_length * cfg.noise_length))
                             : (k == 0 ? 1.0 : 0.0);
  auto axis_energy = [&](std::size_t i, std::size_t n) {
    double e = 0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
      const auto j = static_cast<std::ptrdiff_t>(i) + k;
      if (j >= 0 && j < static_cast<std::ptrdiff_t>(n)) e += taps[static_cast<std::size_t>(k + radius)] *
                                                              taps[static_cast<std::size_t>(k + radius)];
    }
    return e;
  };
  std::vector<double> norm(cfg.h * cfg.w);
  for (std::size_t y = 0; y < cfg.h; ++y)
    for (std::size_t x = 0; x < cfg.w; ++x) norm[y * cfg.w + x] = 1.0 / std::sqrt(axis_energy(y, cfg.h) * axis_energy(x, cfg.w));

  std::mt19937_64 rng(cfg.seed ^ 0x5eed5eedull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> white(cfg.h * cfg.w), rowpass(cfg.h * cfg.w);
  for (std::size_t i = 0; i < cfg.steps; ++i) {
    const double t = static_cast<double>(times[i]);
    const double phase = 2 * std::numbers::pi * std::fmod(t, cfg.season_period) / cfg.season_period;
    const double season = std::sin(phase), detail = std::cos(phase);
    const double drift = cfg.trend * (t - 1.0) / static_cast<double>(cfg.steps);

    const bool noisy = cfg.noise_amplitude != 0.0;
    if (noisy) {
      for (auto& v : white) v = gauss(rng);
      for (std::size_t y = 0; y < cfg.h; ++y)
        for (std::size_t x = 0; x < cfg.w; ++x) {
          double acc = 0;
          for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
            const auto xx = static_cast<std::ptrdiff_t>(x) + k;
            if (xx >= 0 && xx < static_cast<std::ptrdiff_t>(cfg.w))
              acc += taps[static_cast<std::size_t>(k + radius)] * white[y * cfg.w + static_cast<std::size_t>(xx)];
          }
          rowpass[y * cfg.w + x] = acc;
        }
    }
    for (std::size_t y = 0; y < cfg.h; ++y)
      for (std::size_t x = 0; x < cfg.w; ++x) {
        const std::size_t p = y * cfg.w + x;
        double noise = 0;
        if (noisy) {
          for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
            const auto yy = static_cast<std::ptrdiff_t>(y) + k;
            if (yy >= 0 && yy < static_cast<std::ptrdiff_t>(cfg.h))
              noise += taps[static_cast<std::size_t>(k + radius)] * rowpass[static_cast<std::size_t>(yy) * cfg.w + x];
          }
          noise *= norm[p];
        }
        out.at(i, y, x) = static_cast<float>(cfg.base_level + cfg.static_amplitude * f.static_pattern[p] +
                                             cfg.seasonal_amplitude * season * f.seasonal_pattern[p] +
                                             cfg.detail_amplitude * detail * f.detail_pattern[p] + drift +
                                             cfg.noise_amplitude * noise);
      }
  }
  return out;
}

}  // namespace sdown
