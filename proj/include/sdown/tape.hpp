#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdown/grid.hpp"
#include "sdown/params.hpp"

namespace sdown {

// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

enum class Mode { train, infer };

// Linear record of forward ops. backward() replays the nodes in exact reverse
// creation order, each node pushing its gradient into its inputs and into the
// LayerParams it references.
template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(Mode mode = Mode::infer, std::uint64_t seed = 0) : mode_(mode), rng_(seed) {}

  Var leaf(Grid4<T> value, bool requires_grad = false);
  // `needs_grad` marks nodes that own trainable parameters; input requirements
  // are inherited automatically.
  Var record(std::string op, Grid4<T> value, std::vector<Var> inputs, Backward backward, bool needs_grad = false,
             std::uint64_t decisions = 0);

  const Grid4<T>& value(Var v) const { return nodes_[v.id].value; }
  const std::string& op(Var v) const { return nodes_[v.id].op; }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  bool has_grad(Var v) const { return nodes_[v.id].grad.has_value(); }
  // Gradient accumulator for v, zero-initialised on first access.
  Grid4<T>& grad(Var v);
  void accumulate_grad(Var v, std::span<const T> g);

  void backward(Var root);
  void backward(Var root, const Grid4<T>& seed);

  Mode mode() const { return mode_; }
  Rng& rng() { return rng_; }
  std::size_t size() const { return nodes_.size(); }

  // Ops of the nodes whose backward ran, in the order they ran.
  const std::vector<std::string>& backward_trace() const { return trace_; }
  // Combined hash of every piecewise-linear branch choice (ReLU gates, pooling
  // argmaxes). Equal signatures mean the same linear region.
  std::uint64_t decision_signature() const;

 private:
  struct Node {
    std::string op;
    Grid4<T> value;
    std::optional<Grid4<T>> grad;
    std::vector<Var> inputs;
    Backward backward;
    bool needs_grad = false;
    std::uint64_t decisions = 0;
  };

  Mode mode_;
  Rng rng_;
  std::vector<Node> nodes_;
  std::vector<std::string> trace_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace sdown
