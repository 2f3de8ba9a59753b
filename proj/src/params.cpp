#include "sdown/params.hpp"

#include <algorithm>
#include <cmath>

namespace sdown {

template <typename T>
void LayerParams<T>::add(const std::string& role, std::vector<std::size_t> dims) {
  weights[role] = Tensor<T>(dims);
  grads[role] = Tensor<T>(std::move(dims));
}

template <typename T>
Tensor<T>& LayerParams<T>::weight(const std::string& role) {
  auto it = weights.find(role);
  if (it == weights.end()) throw ConfigError("layer '" + name + "' has no '" + role + "' weights");
  return it->second;
}

template <typename T>
const Tensor<T>& LayerParams<T>::weight(const std::string& role) const {
  auto it = weights.find(role);
  if (it == weights.end()) throw ConfigError("layer '" + name + "' has no '" + role + "' weights");
  return it->second;
}

template <typename T>
Tensor<T>& LayerParams<T>::grad(const std::string& role) {
  auto it = grads.find(role);
  if (it == grads.end()) throw ConfigError("layer '" + name + "' has no '" + role + "' gradients");
  return it->second;
}

template <typename T>
void LayerParams<T>::zero_grad() {
  for (auto& [role, g] : grads) std::fill(g.data.begin(), g.data.end(), T(0));
}

template <typename T>
std::size_t LayerParams<T>::count() const {
  std::size_t total = 0;
  for (const auto& [role, w] : weights) total += w.size();
  return total;
}

template <typename T>
std::size_t ParamSet<T>::add(LayerParams<T> layer) {
  layers_.push_back(std::move(layer));
  return layers_.size() - 1;
}

template <typename T>
void ParamSet<T>::zero_grad() {
  for (auto& l : layers_) l.zero_grad();
}

template <typename T>
std::size_t ParamSet<T>::count() const {
  std::size_t total = 0;
  for (const auto& l : layers_) total += l.count();
  return total;
}

namespace {
template <typename T>
void fill_uniform(Tensor<T>& t, double limit, Rng& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : t.data) v = static_cast<T>(dist(rng));
}
}  // namespace

template <typename T>
LayerParams<T> make_conv(const std::string& name, std::size_t kh, std::size_t kw, std::size_t c_in,
                         std::size_t c_out, Rng& rng) {
  LayerParams<T> p;
  p.name = name;
  p.add("kernel", {kh, kw, c_in, c_out});
  p.add("bias", {c_out});
  fill_uniform(p.weight("kernel"), 1.0 / std::sqrt(static_cast<double>(kh * kw * std::max<std::size_t>(c_in, 1))), rng);
  return p;
}

template <typename T>
LayerParams<T> make_dense(const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  LayerParams<T> p;
  p.name = name;
  p.add("kernel", {in, out});
  p.add("bias", {out});
  fill_uniform(p.weight("kernel"), 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(in, 1))), rng);
  return p;
}

template struct LayerParams<float>;
template struct LayerParams<double>;
template class ParamSet<float>;
template class ParamSet<double>;
template LayerParams<float> make_conv<float>(const std::string&, std::size_t, std::size_t, std::size_t, std::size_t, Rng&);
template LayerParams<double> make_conv<double>(const std::string&, std::size_t, std::size_t, std::size_t, std::size_t, Rng&);
template LayerParams<float> make_dense<float>(const std::string&, std::size_t, std::size_t, Rng&);
template LayerParams<double> make_dense<double>(const std::string&, std::size_t, std::size_t, Rng&);

}  // namespace sdown
