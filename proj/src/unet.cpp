#include "sdown/unet.hpp"

namespace sdown {

std::size_t UnetSpec::resolved_bottleneck_filters() const {
  if (bottleneck_filters > 0) return bottleneck_filters;
  return 2 * (encoder_filters.empty() ? initial_filters : encoder_filters.back());
}

KernelSize UnetSpec::level_kernel(std::size_t level) const {
  return kernel_sizes.empty() ? KernelSize{3, 3} : kernel_sizes.at(level);
}

void UnetSpec::validate() const {
  if (target_h == 0 || target_w == 0) throw ConfigError("unet: target dims must be set");
  const std::size_t m = std::size_t{1} << depth();
  if (target_h % m != 0 || target_w % m != 0)
    throw ConfigError("unet: target " + std::to_string(target_h) + "x" + std::to_string(target_w) +
                      " is not divisible by 2^" + std::to_string(depth()));
  if (input_channels == 0 || output_channels == 0) throw ConfigError("unet: channel counts must be >= 1");
  if (initial_filters == 0) throw ConfigError("unet: initial_filters must be >= 1");
  for (auto f : encoder_filters)
    if (f == 0) throw ConfigError("unet: filters must be >= 1");
  if (!kernel_sizes.empty() && kernel_sizes.size() != depth())
    throw ConfigError("unet: kernel_sizes must have one entry per encoder level");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw ConfigError("unet: dropout rate must lie in [0, 1)");
}

template <typename T>
Unet<T>::Unet(UnetSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  Rng rng(spec_.seed);
  auto& ps = this->params_;
  const KernelSize k3{3, 3};

  std::size_t channels = spec_.input_channels;
  for (std::size_t i = 0; i < spec_.initial_layers; ++i) {
    initial_.push_back(ps.add(make_conv<T>("unet.initial" + std::to_string(i), k3.h, k3.w, channels,
                                           spec_.initial_filters, rng)));
    channels = spec_.initial_filters;
  }
  std::vector<std::size_t> skip_channels;
  for (std::size_t j = 0; j < spec_.depth(); ++j) {
    const auto k = spec_.level_kernel(j);
    const std::size_t f = spec_.encoder_filters[j];
    enc_a_.push_back(ps.add(make_conv<T>("unet.enc" + std::to_string(j) + ".conv1", k.h, k.w, channels, f, rng)));
    enc_b_.push_back(ps.add(make_conv<T>("unet.enc" + std::to_string(j) + ".conv2", k.h, k.w, f, f, rng)));
    skip_channels.push_back(f);
    channels = f;
  }
  const std::size_t bf = spec_.resolved_bottleneck_filters();
  bott_a_ = ps.add(make_conv<T>("unet.bottleneck.conv1", k3.h, k3.w, channels, bf, rng));
  bott_b_ = ps.add(make_conv<T>("unet.bottleneck.conv2", k3.h, k3.w, bf, bf, rng));
  channels = bf;
  if (spec_.temporal) {
    spec_.temporal->fusion_h = spec_.bottleneck_h();
    spec_.temporal->fusion_w = spec_.bottleneck_w();
    temporal_.emplace(*spec_.temporal, ps, rng, "unet.temporal");
    channels += temporal_->output_channels();
  }
  // Decoder level j (deepest first) consumes the upsampled features plus skip j.
  dec_a_.resize(spec_.depth());
  dec_b_.resize(spec_.depth());
  for (std::size_t jj = spec_.depth(); jj-- > 0;) {
    const auto k = spec_.level_kernel(jj);
    const std::size_t f = spec_.encoder_filters[jj];
    dec_a_[jj] = ps.add(make_conv<T>("unet.dec" + std::to_string(jj) + ".conv1", k.h, k.w, channels + skip_channels[jj], f, rng));
    dec_b_[jj] = ps.add(make_conv<T>("unet.dec" + std::to_string(jj) + ".conv2", k.h, k.w, f, f, rng));
    channels = f;
  }
  out_ = ps.add(make_conv<T>("unet.output", k3.h, k3.w, channels, spec_.output_channels, rng));
}

template <typename T>
Var Unet<T>::forward(Tape<T>& tape, Var x, std::span<const double> t) {
  auto& ps = this->params_;
  const auto& in = tape.value(x);
  if (in.c() != spec_.input_channels)
    throw ShapeError("unet: input " + in.shape().str() + " expects " + std::to_string(spec_.input_channels) + " channels");
  if (temporal_ && t.size() != in.n())
    throw UsageError("unet: temporal model needs one time point per batch item (got " + std::to_string(t.size()) +
                     " for " + std::to_string(in.n()) + ")");

  Var h = ops::bilinear_resize(tape, x, spec_.target_h, spec_.target_w);
  for (std::size_t idx : initial_) h = ops::relu(tape, ops::conv2d(tape, h, ps[idx]));
  last_skips_.clear();
  for (std::size_t j = 0; j < spec_.depth(); ++j) {
    h = ops::relu(tape, ops::conv2d(tape, h, ps[enc_a_[j]]));
    h = ops::relu(tape, ops::conv2d(tape, h, ps[enc_b_[j]]));
    last_skips_.push_back(h);
    h = ops::max_pool2(tape, h);
  }
  h = ops::relu(tape, ops::conv2d(tape, h, ps[bott_a_]));
  h = ops::relu(tape, ops::conv2d(tape, h, ps[bott_b_]));
  h = ops::dropout(tape, h, spec_.dropout_rate);
  last_bottleneck_ = h;
  if (temporal_) h = ops::concat_channels(tape, h, temporal_->forward(tape, ps, t));
  for (std::size_t jj = spec_.depth(); jj-- > 0;) {
    const auto& skip = tape.value(last_skips_[jj]);
    h = ops::bilinear_resize(tape, h, skip.h(), skip.w());
    h = ops::concat_channels(tape, h, last_skips_[jj]);
    h = ops::relu(tape, ops::conv2d(tape, h, ps[dec_a_[jj]]));
    h = ops::relu(tape, ops::conv2d(tape, h, ps[dec_b_[jj]]));
  }
  return ops::conv2d(tape, h, ps[out_]);
}

template <typename T>
Shape4 Unet<T>::output_shape(const Shape4& input) const {
  return {input.n, spec_.target_h, spec_.target_w, spec_.output_channels};
}

template class Unet<float>;
template class Unet<double>;

}  // namespace sdown
