#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdown/ops.hpp"
#include "sdown/temporal_encoding.hpp"

namespace sdown {

struct KernelSize {
  std::size_t h = 3, w = 3;
  bool operator==(const KernelSize&) const = default;
};

struct TemporalModuleSpec {
  TemporalEncodingConfig encoding;
  // Configured hidden dense sizes. A final layer of fusion_h * fusion_w units
  // is appended unless the list already ends with it.
  std::vector<std::size_t> hidden_layers{32, 64, 128};
  std::vector<std::size_t> cnn_filters{8, 16};
  std::vector<KernelSize> cnn_kernels{{3, 3}, {3, 3}};
  std::size_t fusion_h = 0, fusion_w = 0;

  void validate() const;
  std::vector<std::size_t> dense_layers() const;
  std::size_t output_channels() const;
};

// Doubling from `start` while the next size is at most half of `units`, then `units`
// (32 -> ... -> 256 -> 900 for a 30x30 fusion grid).
std::vector<std::size_t> geometric_hidden_layers(std::size_t units, std::size_t start = 32);

// encode -> dense/ReLU stack -> reshape to (fusion_h, fusion_w, 1) row-major -> conv/ReLU stack.
template <typename T>
class TemporalModule {
 public:
  TemporalModule(TemporalModuleSpec spec, ParamSet<T>& params, Rng& rng, const std::string& prefix);

  // Output (t.size(), fusion_h, fusion_w, output_channels()).
  Var forward(Tape<T>& tape, ParamSet<T>& params, std::span<const double> t) const;

  const TemporalModuleSpec& spec() const { return spec_; }
  std::size_t output_channels() const { return spec_.output_channels(); }

 private:
  TemporalModuleSpec spec_;
  TemporalEncoder encoder_;
  std::vector<std::size_t> dense_;
  std::vector<std::size_t> convs_;
};

extern template class TemporalModule<float>;
extern template class TemporalModule<double>;

}  // namespace sdown
