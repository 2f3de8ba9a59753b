#pragma once

#include <cstdint>

#include "sdown/data_io.hpp"

namespace sdown {

// Closed-form synthetic spatio-temporal field, t = 1..steps:
//
//   f(t, y, x) = base_level
//              + static_amplitude   * B(y, x)
//              + seasonal_amplitude * sin(2 pi t / P) * S(y, x)
//              + detail_amplitude   * cos(2 pi t / P) * D(y, x)
//              + trend * (t - 1) / steps
//              + noise_amplitude    * N_t(y, x)
//
// B and S are sums of broad Gaussian bumps (max |.| = 1). D is a texture of
// narrow bumps with every detail_block x detail_block block mean removed, so
// it vanishes under block coarsening by that factor (max |.| = 1). N_t is
// white in time and Gaussian-smoothed in space, rescaled to unit variance at
// every pixel, so the per-pixel mean is the deterministic part and the
// per-pixel standard deviation is noise_amplitude.
struct SynthConfig {
  std::size_t h = 24, w = 24, steps = 730;
  double season_period = 365.0;
  double base_level = 50.0;
  double static_amplitude = 10.0;
  double seasonal_amplitude = 8.0;
  double detail_amplitude = 6.0;
  std::size_t detail_block = 4;
  double trend = 1.0;
  double noise_amplitude = 1.0;
  double noise_length = 2.0;
  std::size_t n_bumps = 6;
  // Static bump widths as fractions of min(h, w).
  double static_width_min = 0.12, static_width_max = 0.3;
  std::uint64_t seed = 1;
};

struct SynthFields {
  std::vector<double> static_pattern, seasonal_pattern, detail_pattern;
};

SynthFields synth_patterns(const SynthConfig& cfg);
GridSeries synth_generate(const SynthConfig& cfg);

}  // namespace sdown
