#include "sdown/srdrn.hpp"

#include <bit>

namespace sdown {

std::size_t SrdrnSpec::num_upsampling_blocks() const {
  return upscale_factor == 0 ? 0 : static_cast<std::size_t>(std::bit_width(upscale_factor) - 1);
}

void SrdrnSpec::validate() const {
  if (upscale_factor == 0 || !std::has_single_bit(upscale_factor))
    throw ConfigError("srdrn: upscale factor " + std::to_string(upscale_factor) + " is not a power of 2");
  if (input_channels == 0 || output_channels == 0) throw ConfigError("srdrn: channel counts must be >= 1");
  if (res_block_filters == 0) throw ConfigError("srdrn: num_res_block_filters must be >= 1");
  if (kernel.h == 0 || kernel.w == 0) throw ConfigError("srdrn: kernel size must be >= 1");
  const std::size_t blocks = num_upsampling_blocks();
  if (upscaling_filters.size() < blocks)
    throw ConfigError("srdrn: upscaling_filters lists " + std::to_string(upscaling_filters.size()) + " entries but " +
                      std::to_string(blocks) + " upsampling blocks are needed");
  for (std::size_t b = 0; b < blocks; ++b)
    if (upscaling_filters[b] == 0) throw ConfigError("srdrn: upscaling filter counts must be >= 1");
  if (temporal && (coarse_h == 0 || coarse_w == 0))
    throw ConfigError("srdrn: coarse grid dims are required for temporal fusion");
}

template <typename T>
Srdrn<T>::Srdrn(SrdrnSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  Rng rng(spec_.seed);
  auto& ps = this->params_;
  const auto k = spec_.kernel;
  const std::size_t f = spec_.res_block_filters;

  initial_ = ps.add(make_conv<T>("srdrn.initial", k.h, k.w, spec_.input_channels, f, rng));
  for (std::size_t l = 0; l < spec_.num_residual_blocks; ++l) {
    res_a_.push_back(ps.add(make_conv<T>("srdrn.res" + std::to_string(l) + ".conv1", k.h, k.w, f, f, rng)));
    res_b_.push_back(ps.add(make_conv<T>("srdrn.res" + std::to_string(l) + ".conv2", k.h, k.w, f, f, rng)));
  }
  intermediate_ = ps.add(make_conv<T>("srdrn.intermediate", k.h, k.w, f, f, rng));

  std::size_t channels = f;
  if (spec_.temporal) {
    spec_.temporal->fusion_h = spec_.coarse_h;
    spec_.temporal->fusion_w = spec_.coarse_w;
    temporal_.emplace(*spec_.temporal, ps, rng, "srdrn.temporal");
    channels += temporal_->output_channels();
  }
  for (std::size_t b = 0; b < spec_.num_upsampling_blocks(); ++b) {
    const std::size_t filters = spec_.upscaling_filters[b];
    up_.push_back(ps.add(make_conv<T>("srdrn.up" + std::to_string(b), k.h, k.w, channels, filters * 4, rng)));
    channels = filters;
  }
  final_ = ps.add(make_conv<T>("srdrn.final", k.h, k.w, channels, spec_.output_channels, rng));
}

template <typename T>
Var Srdrn<T>::forward(Tape<T>& tape, Var x, std::span<const double> t) {
  auto& ps = this->params_;
  const auto& in = tape.value(x);
  if (in.c() != spec_.input_channels)
    throw ShapeError("srdrn: input " + in.shape().str() + " expects " + std::to_string(spec_.input_channels) + " channels");
  if (temporal_) {
    if (t.size() != in.n())
      throw UsageError("srdrn: temporal model needs one time point per batch item (got " + std::to_string(t.size()) +
                       " for " + std::to_string(in.n()) + ")");
    if (in.h() != spec_.coarse_h || in.w() != spec_.coarse_w)
      throw ShapeError("srdrn: input " + in.shape().str() + " does not match the temporal fusion grid " +
                       std::to_string(spec_.coarse_h) + "x" + std::to_string(spec_.coarse_w));
  }

  const Var s0 = ops::conv2d(tape, x, ps[initial_]);
  Var h = s0;
  for (std::size_t l = 0; l < res_a_.size(); ++l) {
    Var f = ops::relu(tape, ops::conv2d(tape, h, ps[res_a_[l]]));
    f = ops::conv2d(tape, f, ps[res_b_[l]]);
    h = ops::add(tape, h, f);
  }
  h = ops::add(tape, ops::conv2d(tape, h, ps[intermediate_]), s0);
  if (temporal_) h = ops::concat_channels(tape, h, temporal_->forward(tape, ps, t));
  for (std::size_t idx : up_) h = ops::relu(tape, ops::pixel_shuffle(tape, ops::conv2d(tape, h, ps[idx]), 2));
  return ops::conv2d(tape, h, ps[final_]);
}

template <typename T>
Shape4 Srdrn<T>::output_shape(const Shape4& input) const {
  const std::size_t r = std::size_t{1} << spec_.num_upsampling_blocks();
  return {input.n, input.h * r, input.w * r, spec_.output_channels};
}

template class Srdrn<float>;
template class Srdrn<double>;

}  // namespace sdown
