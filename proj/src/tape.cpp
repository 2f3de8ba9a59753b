#include "sdown/tape.hpp"

namespace sdown {

template <typename T>
Var Tape<T>::leaf(Grid4<T> value, bool requires_grad) {
  Node node;
  node.op = "leaf";
  node.value = std::move(value);
  node.needs_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return {nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::record(std::string op, Grid4<T> value, std::vector<Var> inputs, Backward backward, bool needs_grad,
                    std::uint64_t decisions) {
  Node node;
  node.op = std::move(op);
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  for (Var in : inputs) node.needs_grad = node.needs_grad || nodes_.at(in.id).needs_grad;
  node.inputs = std::move(inputs);
  node.backward = std::move(backward);
  node.decisions = decisions;
  nodes_.push_back(std::move(node));
  return {nodes_.size() - 1};
}

template <typename T>
Grid4<T>& Tape<T>::grad(Var v) {
  auto& node = nodes_[v.id];
  if (!node.grad) node.grad.emplace(node.value.shape(), T(0));
  return *node.grad;
}

template <typename T>
void Tape<T>::accumulate_grad(Var v, std::span<const T> g) {
  auto& dst = grad(v);
  if (g.size() != dst.size()) throw ShapeError("accumulate_grad: size mismatch at node '" + nodes_[v.id].op + "'");
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

template <typename T>
void Tape<T>::backward(Var root) {
  backward(root, Grid4<T>(nodes_.at(root.id).value.shape(), T(1)));
}

template <typename T>
void Tape<T>::backward(Var root, const Grid4<T>& seed) {
  require_same_shape(seed.shape(), nodes_.at(root.id).value.shape(), "backward seed");
  trace_.clear();
  accumulate_grad(root, seed.data());
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.grad || !node.backward || !node.needs_grad) continue;
    trace_.push_back(node.op);
    node.backward(*this, i);
  }
}

template <typename T>
std::uint64_t Tape<T>::decision_signature() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& node : nodes_) {
    h ^= node.decisions;
    h *= 1099511628211ull;
  }
  return h;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace sdown
