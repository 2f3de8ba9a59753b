#include "sdown/temporal_module.hpp"

namespace sdown {

void TemporalModuleSpec::validate() const {
  encoding.validate();
  if (fusion_h == 0 || fusion_w == 0) throw ConfigError("temporal module: fusion grid dims must be set");
  if (cnn_filters.size() != cnn_kernels.size())
    throw ConfigError("temporal module: temporal_cnn_filters and temporal_cnn_kernel_sizes differ in length (" +
                      std::to_string(cnn_filters.size()) + " vs " + std::to_string(cnn_kernels.size()) + ")");
  for (auto u : hidden_layers)
    if (u == 0) throw ConfigError("temporal module: hidden layer sizes must be >= 1");
  for (auto f : cnn_filters)
    if (f == 0) throw ConfigError("temporal module: filter counts must be >= 1");
  for (auto k : cnn_kernels)
    if (k.h == 0 || k.w == 0) throw ConfigError("temporal module: kernel sizes must be >= 1");
  const auto layers = dense_layers();
  if (layers.back() != fusion_h * fusion_w)
    throw ConfigError("temporal module: last dense layer has " + std::to_string(layers.back()) + " units, fusion grid needs " +
                      std::to_string(fusion_h * fusion_w));
}

std::vector<std::size_t> TemporalModuleSpec::dense_layers() const {
  std::vector<std::size_t> layers = hidden_layers;
  const std::size_t units = fusion_h * fusion_w;
  if (layers.empty() || layers.back() != units) layers.push_back(units);
  return layers;
}

std::size_t TemporalModuleSpec::output_channels() const { return cnn_filters.empty() ? 1 : cnn_filters.back(); }

std::vector<std::size_t> geometric_hidden_layers(std::size_t units, std::size_t start) {
  std::vector<std::size_t> layers;
  for (std::size_t v = start; v > 0 && 2 * v <= units; v *= 2) layers.push_back(v);
  layers.push_back(units);
  return layers;
}

template <typename T>
TemporalModule<T>::TemporalModule(TemporalModuleSpec spec, ParamSet<T>& params, Rng& rng, const std::string& prefix)
    : spec_(std::move(spec)), encoder_(spec_.encoding) {
  spec_.validate();
  std::size_t in = encoder_.feature_length();
  const auto layers = spec_.dense_layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    dense_.push_back(params.add(make_dense<T>(prefix + ".dense" + std::to_string(i), in, layers[i], rng)));
    in = layers[i];
  }
  std::size_t channels = 1;
  for (std::size_t i = 0; i < spec_.cnn_filters.size(); ++i) {
    const auto k = spec_.cnn_kernels[i];
    convs_.push_back(params.add(make_conv<T>(prefix + ".conv" + std::to_string(i), k.h, k.w, channels,
                                             spec_.cnn_filters[i], rng)));
    channels = spec_.cnn_filters[i];
  }
}

template <typename T>
Var TemporalModule<T>::forward(Tape<T>& tape, ParamSet<T>& params, std::span<const double> t) const {
  if (t.empty()) throw UsageError("temporal module: time points required");
  const std::size_t len = encoder_.feature_length();
  Grid4<T> features({t.size(), 1, 1, len});
  for (std::size_t b = 0; b < t.size(); ++b) {
    const auto enc = encoder_.encode(t[b]);
    for (std::size_t k = 0; k < len; ++k) features[b * len + k] = static_cast<T>(enc[k]);
  }
  Var h = tape.leaf(std::move(features));
  for (std::size_t idx : dense_) h = ops::relu(tape, ops::dense(tape, h, params[idx]));
  h = ops::reshape(tape, h, {t.size(), spec_.fusion_h, spec_.fusion_w, 1});
  for (std::size_t idx : convs_) h = ops::relu(tape, ops::conv2d(tape, h, params[idx]));
  return h;
}

template class TemporalModule<float>;
template class TemporalModule<double>;

}  // namespace sdown
