#pragma once

#include <optional>
#include <vector>

#include "sdown/network.hpp"
#include "sdown/temporal_module.hpp"

namespace sdown {

struct UnetSpec {
  std::size_t input_channels = 1;
  std::size_t output_channels = 1;
  std::size_t target_h = 0, target_w = 0;
  std::size_t initial_filters = 16;
  std::size_t initial_layers = 1;
  // One entry per encoder level; the decoder mirrors it in reverse.
  std::vector<std::size_t> encoder_filters{32, 64, 128};
  // 0 selects twice the deepest encoder filter count.
  std::size_t bottleneck_filters = 0;
  // Per encoder/decoder level; empty means 3x3 everywhere.
  std::vector<KernelSize> kernel_sizes;
  double dropout_rate = 0.0;
  // Fused at the bottleneck; fusion dims are filled in by the builder.
  std::optional<TemporalModuleSpec> temporal;
  std::uint64_t seed = 42;

  std::size_t depth() const { return encoder_filters.size(); }
  std::size_t resolved_bottleneck_filters() const;
  std::size_t bottleneck_h() const { return target_h >> depth(); }
  std::size_t bottleneck_w() const { return target_w >> depth(); }
  KernelSize level_kernel(std::size_t level) const;
  void validate() const;
};

// bilinear to target -> initial conv/ReLU layers -> encoder blocks
// (2x conv/ReLU, keep skip, max_pool2) -> bottleneck (2x conv/ReLU, dropout,
// concat temporal) -> decoder blocks (bilinear x2, concat skip, 2x conv/ReLU)
// -> linear output conv.
template <typename T>
class Unet final : public Network<T> {
 public:
  explicit Unet(UnetSpec spec);

  ModelKind kind() const override { return ModelKind::unet; }
  bool temporal() const override { return temporal_.has_value(); }
  Var forward(Tape<T>& tape, Var x, std::span<const double> t) override;
  Shape4 output_shape(const Shape4& input) const override;
  std::unique_ptr<Network<T>> clone() const override { return std::make_unique<Unet<T>>(*this); }

  const UnetSpec& spec() const { return spec_; }
  // Values recorded by the last forward, for shape inspection.
  const std::vector<Var>& encoder_outputs() const { return last_skips_; }
  Var bottleneck_output() const { return last_bottleneck_; }

 private:
  UnetSpec spec_;
  std::vector<std::size_t> initial_;
  std::vector<std::size_t> enc_a_, enc_b_, dec_a_, dec_b_;
  std::size_t bott_a_ = 0, bott_b_ = 0, out_ = 0;
  std::optional<TemporalModule<T>> temporal_;
  std::vector<Var> last_skips_;
  Var last_bottleneck_;
};

extern template class Unet<float>;
extern template class Unet<double>;

}  // namespace sdown
