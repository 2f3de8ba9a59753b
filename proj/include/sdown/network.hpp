#pragma once

#include <memory>
#include <span>
#include <string>

#include "sdown/tape.hpp"

namespace sdown {

enum class ModelKind : std::uint8_t { srdrn = 0, unet = 1, bcsd = 2 };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

// Common surface of the trainable downscaling networks.
template <typename T>
class Network {
 public:
  virtual ~Network() = default;

  virtual ModelKind kind() const = 0;
  virtual bool temporal() const = 0;
  // x: (n, coarse_h, coarse_w, c_in). t must hold n time points iff temporal().
  virtual Var forward(Tape<T>& tape, Var x, std::span<const double> t) = 0;
  virtual Shape4 output_shape(const Shape4& input) const = 0;
  virtual std::unique_ptr<Network<T>> clone() const = 0;

  ParamSet<T>& params() { return params_; }
  const ParamSet<T>& params() const { return params_; }

 protected:
  ParamSet<T> params_;
};

}  // namespace sdown
