#pragma once

#include <cstddef>
#include <vector>

namespace sdown {

enum class EncodingKind { sinusoidal, rbf };

struct TemporalEncodingConfig {
  EncodingKind kind = EncodingKind::rbf;
  double cyclical_period = 365.0;
  std::vector<std::size_t> resolution_levels{9, 17, 37};
  // Domain length T used for node placement and scales. With seasonal_wrap
  // this is the cyclical period.
  double domain_length = 365.0;
  // Map t to ((t - 1) mod c) + 1 before the RBF transform.
  bool seasonal_wrap = true;

  void validate() const;
  std::size_t feature_length() const;
};

struct RBFBasis {
  // nodes[j][i] is node i of resolution level j.
  std::vector<std::vector<double>> nodes;
  // scales[j] = T / (G_j + 2)
  std::vector<double> scales;

  std::size_t size() const;
};

struct SinCos {
  double g1, g2;
};

SinCos encode_sinusoidal(double t, double period);

// Level j gets G_j interior nodes i * T / (G_j + 1), i = 1..G_j.
RBFBasis build_rbf_basis(const std::vector<std::size_t>& levels, double domain_length);

double seasonal_time(double t, double period);

// exp(-|t' - o|^2 / (2 zeta)) for every node, level-major.
std::vector<double> encode_rbf(double t, const RBFBasis& basis, bool seasonal_wrap, double period);

// Dispatches on cfg.kind; output length cfg.feature_length().
class TemporalEncoder {
 public:
  explicit TemporalEncoder(TemporalEncodingConfig cfg);
  const TemporalEncodingConfig& config() const { return cfg_; }
  std::size_t feature_length() const { return cfg_.feature_length(); }
  std::vector<double> encode(double t) const;

 private:
  TemporalEncodingConfig cfg_;
  RBFBasis basis_;
};

}  // namespace sdown
