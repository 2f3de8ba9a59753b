#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "sdown/grid.hpp"

namespace sdown {

// Learnable buffers of one layer, keyed by role ("kernel", "bias"), with
// same-shaped gradient accumulators.
template <typename T>
struct LayerParams {
  std::string name;
  std::map<std::string, Tensor<T>> weights;
  std::map<std::string, Tensor<T>> grads;
  bool trainable = true;

  void add(const std::string& role, std::vector<std::size_t> dims);
  bool has(const std::string& role) const { return weights.contains(role); }
  Tensor<T>& weight(const std::string& role);
  const Tensor<T>& weight(const std::string& role) const;
  Tensor<T>& grad(const std::string& role);
  void zero_grad();
  std::size_t count() const;
};

// Ordered collection of layers. Models refer to layers by index so copies
// remain self-consistent.
template <typename T>
class ParamSet {
 public:
  std::size_t add(LayerParams<T> layer);
  LayerParams<T>& operator[](std::size_t i) { return layers_[i]; }
  const LayerParams<T>& operator[](std::size_t i) const { return layers_[i]; }
  std::size_t size() const { return layers_.size(); }
  std::vector<LayerParams<T>>& layers() { return layers_; }
  const std::vector<LayerParams<T>>& layers() const { return layers_; }

  void zero_grad();
  std::size_t count() const;

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& l : layers_) {
      LayerParams<U> m;
      m.name = l.name;
      m.trainable = l.trainable;
      for (const auto& [role, t] : l.weights) {
        m.add(role, t.shape);
        auto& dst = m.weight(role).data;
        for (std::size_t i = 0; i < t.data.size(); ++i) dst[i] = static_cast<U>(t.data[i]);
      }
      out.add(std::move(m));
    }
    return out;
  }

 private:
  std::vector<LayerParams<T>> layers_;
};

using Rng = std::mt19937_64;

// Conv and dense kernels ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero.
// Draws are taken in double so float and double builds of one seed agree.
template <typename T>
LayerParams<T> make_conv(const std::string& name, std::size_t kh, std::size_t kw, std::size_t c_in,
                         std::size_t c_out, Rng& rng);
template <typename T>
LayerParams<T> make_dense(const std::string& name, std::size_t in, std::size_t out, Rng& rng);

extern template struct LayerParams<float>;
extern template struct LayerParams<double>;
extern template class ParamSet<float>;
extern template class ParamSet<double>;

}  // namespace sdown
