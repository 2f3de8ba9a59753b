#include "sdown/temporal_encoding.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "sdown/errors.hpp"

namespace sdown {

void TemporalEncodingConfig::validate() const {
  if (!(cyclical_period > 0)) throw ConfigError("cyclical_period must be > 0");
  if (kind == EncodingKind::rbf) {
    if (resolution_levels.empty()) throw ConfigError("temporal_basis must list at least one level");
    for (auto g : resolution_levels)
      if (g < 1) throw ConfigError("temporal_basis levels must be >= 1");
    if (!(domain_length >= 1)) throw ConfigError("temporal domain length must be >= 1");
  }
}

std::size_t TemporalEncodingConfig::feature_length() const {
  if (kind == EncodingKind::sinusoidal) return 2;
  return std::accumulate(resolution_levels.begin(), resolution_levels.end(), std::size_t{0});
}

std::size_t RBFBasis::size() const {
  std::size_t total = 0;
  for (const auto& level : nodes) total += level.size();
  return total;
}

SinCos encode_sinusoidal(double t, double period) {
  // Reducing t first makes encode(t) and encode(t + c) bit-identical.
  double reduced = std::fmod(t, period);
  if (reduced < 0) reduced += period;
  const double phase = 2.0 * std::numbers::pi * reduced / period;
  return {std::cos(phase), std::sin(phase)};
}

RBFBasis build_rbf_basis(const std::vector<std::size_t>& levels, double domain_length) {
  RBFBasis basis;
  for (std::size_t g : levels) {
    if (g < 1) throw ConfigError("RBF level counts must be >= 1");
    std::vector<double> nodes(g);
    const double spacing = domain_length / static_cast<double>(g + 1);
    for (std::size_t i = 0; i < g; ++i) nodes[i] = static_cast<double>(i + 1) * spacing;
    basis.nodes.push_back(std::move(nodes));
    basis.scales.push_back(domain_length / static_cast<double>(g + 2));
  }
  return basis;
}

double seasonal_time(double t, double period) {
  double shifted = std::fmod(t - 1.0, period);
  if (shifted < 0) shifted += period;
  return shifted + 1.0;
}

std::vector<double> encode_rbf(double t, const RBFBasis& basis, bool seasonal_wrap, double period) {
  const double tt = seasonal_wrap ? seasonal_time(t, period) : t;
  std::vector<double> out;
  out.reserve(basis.size());
  for (std::size_t j = 0; j < basis.nodes.size(); ++j) {
    const double zeta = basis.scales[j];
    for (double o : basis.nodes[j]) {
      const double d = tt - o;
      out.push_back(std::exp(-(d * d) / (2.0 * zeta)));
    }
  }
  return out;
}

TemporalEncoder::TemporalEncoder(TemporalEncodingConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.kind == EncodingKind::rbf) basis_ = build_rbf_basis(cfg_.resolution_levels, cfg_.domain_length);
}

std::vector<double> TemporalEncoder::encode(double t) const {
  if (cfg_.kind == EncodingKind::sinusoidal) {
    const auto [g1, g2] = encode_sinusoidal(t, cfg_.cyclical_period);
    return {g1, g2};
  }
  return encode_rbf(t, basis_, cfg_.seasonal_wrap, cfg_.cyclical_period);
}

}  // namespace sdown
