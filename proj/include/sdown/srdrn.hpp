#pragma once

#include <optional>
#include <vector>

#include "sdown/network.hpp"
#include "sdown/temporal_module.hpp"

namespace sdown {

struct SrdrnSpec {
  std::size_t input_channels = 1;
  std::size_t output_channels = 1;
  std::size_t num_residual_blocks = 3;
  std::size_t res_block_filters = 64;
  // Total magnification; must be a power of two.
  std::size_t upscale_factor = 4;
  // Filters per upsampling block, consumed in order; needs at least n_B entries.
  std::vector<std::size_t> upscaling_filters{64, 32, 16, 8, 4, 2};
  KernelSize kernel{3, 3};
  // Fusion grid is the coarse input grid; fusion dims are filled in by the builder.
  std::optional<TemporalModuleSpec> temporal;
  std::size_t coarse_h = 0, coarse_w = 0;
  std::uint64_t seed = 42;

  // floor(log2(upscale_factor)).
  std::size_t num_upsampling_blocks() const;
  void validate() const;
};

// Time-aware super-resolution deep residual network.
//   s0 = conv(x)                               (no activation)
//   h  = residual blocks h + conv(relu(conv(h)))
//   h  = conv(h) + s0                          (global residual)
//   h  = concat(h, temporal(t))                (optional)
//   h  = relu(pixel_shuffle(conv(h), 2))       (n_B times)
//   y  = conv(h)                               (linear)
template <typename T>
class Srdrn final : public Network<T> {
 public:
  explicit Srdrn(SrdrnSpec spec);

  ModelKind kind() const override { return ModelKind::srdrn; }
  bool temporal() const override { return temporal_.has_value(); }
  Var forward(Tape<T>& tape, Var x, std::span<const double> t) override;
  Shape4 output_shape(const Shape4& input) const override;
  std::unique_ptr<Network<T>> clone() const override { return std::make_unique<Srdrn<T>>(*this); }

  const SrdrnSpec& spec() const { return spec_; }
  // Parameter indices of the second conv of each residual block.
  const std::vector<std::size_t>& residual_output_convs() const { return res_b_; }

 private:
  SrdrnSpec spec_;
  std::size_t initial_ = 0, intermediate_ = 0, final_ = 0;
  std::vector<std::size_t> res_a_, res_b_, up_;
  std::optional<TemporalModule<T>> temporal_;
};

extern template class Srdrn<float>;
extern template class Srdrn<double>;

}  // namespace sdown
