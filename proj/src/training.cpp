#include "sdown/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "sdown/kernels.hpp"
#include "sdown/ops.hpp"

namespace sdown {

namespace {

void field_moments(const GridSeries& s, double& mean, double& sd, const char* what) {
  double sum = 0;
  std::size_t n = 0;
  for (float v : s.data)
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  if (n == 0) throw ConfigError(std::string("normalisation: ") + what + " field has no finite values");
  mean = sum / static_cast<double>(n);
  double ss = 0;
  for (float v : s.data)
    if (std::isfinite(v)) ss += (v - mean) * (v - mean);
  sd = std::sqrt(ss / static_cast<double>(n));
  if (!(sd > 0)) throw ConfigError(std::string("normalisation: ") + what + " field is constant (zero variance)");
}

}  // namespace

NormStats NormStats::compute(const DatasetPair& train) {
  NormStats s;
  field_moments(train.coarse, s.coarse_mean, s.coarse_std, "coarse");
  field_moments(train.fine, s.fine_mean, s.fine_std, "fine");
  return s;
}

Grid4<float> normalize_input(const GridSeries& coarse, const NormStats& stats) {
  Grid4<float> g = coarse.as_grid();
  for (auto& v : g.vec())
    v = std::isfinite(v) ? static_cast<float>((v - stats.coarse_mean) / stats.coarse_std) : 0.0f;
  return g;
}

Grid4<float> normalize_target(const GridSeries& fine, const NormStats& stats) {
  Grid4<float> g = fine.as_grid();
  for (auto& v : g.vec())
    if (std::isfinite(v)) v = static_cast<float>((v - stats.fine_mean) / stats.fine_std);
  return g;
}

double denormalize_fine(double z, const NormStats& stats) { return z * stats.fine_std + stats.fine_mean; }

template <typename T>
void adam_step(ParamSet<T>& params, AdamState& state, const AdamConfig& cfg) {
  std::size_t slots = 0;
  for (auto& layer : params.layers()) {
    for (auto& [role, g] : layer.grads) {
      if (layer.trainable)
        for (T v : g.data)
          if (!std::isfinite(static_cast<double>(v)))
            throw NumericError("adam: non-finite gradient in " + layer.name + "." + role);
      ++slots;
    }
  }
  if (state.m.empty()) {
    for (auto& layer : params.layers())
      for (auto& [role, w] : layer.weights) {
        state.m.emplace_back(w.size(), 0.0);
        state.v.emplace_back(w.size(), 0.0);
      }
  }
  if (state.m.size() != slots) throw ShapeError("adam: optimiser state does not match the parameter set");

  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  std::size_t slot = 0;
  for (auto& layer : params.layers()) {
    for (auto& [role, w] : layer.weights) {
      auto& m = state.m[slot];
      auto& v = state.v[slot];
      ++slot;
      if (!layer.trainable) continue;
      const auto& g = layer.grads.at(role).data;
      for (std::size_t i = 0; i < w.data.size(); ++i) {
        const double gi = static_cast<double>(g[i]);
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
        const double mhat = m[i] / bc1, vhat = v[i] / bc2;
        w.data[i] = static_cast<T>(static_cast<double>(w.data[i]) - cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon));
      }
    }
  }
}

template void adam_step<float>(ParamSet<float>&, AdamState&, const AdamConfig&);
template void adam_step<double>(ParamSet<double>&, AdamState&, const AdamConfig&);

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (optimizer != "adam") throw ConfigError("unsupported optimizer '" + optimizer + "' (adam)");
  if (loss != "mse") throw ConfigError("unsupported loss '" + loss + "' (mse)");
  if (validation_split < 0 || validation_split >= 1) throw ConfigError("validation split must lie in [0, 1)");
}

std::string TrainingTrace::to_csv() const {
  std::string out = "epoch,train_loss,val_loss,seconds\n";
  char buf[160];
  for (const auto& e : epochs) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.6f\n", e.epoch, e.train_loss, e.val_loss, e.seconds);
    out += buf;
  }
  return out;
}

double masked_mse_value(std::span<const float> pred, std::span<const float> truth) {
  if (pred.size() != truth.size()) throw ShapeError("masked_mse: size mismatch");
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!std::isfinite(truth[i])) continue;
    const double d = static_cast<double>(pred[i]) - static_cast<double>(truth[i]);
    sum += d * d;
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

namespace {

struct Batch {
  Grid4<float> x, y;
  std::vector<double> t;
};

Batch gather(const Grid4<float>& x, const Grid4<float>& y, const std::vector<double>& times,
             std::span<const std::size_t> idx, bool temporal) {
  const std::size_t xs = x.h() * x.w() * x.c(), ys = y.h() * y.w() * y.c();
  Batch b{Grid4<float>({idx.size(), x.h(), x.w(), x.c()}), Grid4<float>({idx.size(), y.h(), y.w(), y.c()}), {}};
  for (std::size_t k = 0; k < idx.size(); ++k) {
    std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(idx[k] * xs), xs,
                b.x.data().begin() + static_cast<std::ptrdiff_t>(k * xs));
    std::copy_n(y.data().begin() + static_cast<std::ptrdiff_t>(idx[k] * ys), ys,
                b.y.data().begin() + static_cast<std::ptrdiff_t>(k * ys));
    if (temporal) b.t.push_back(times[idx[k]]);
  }
  return b;
}

std::size_t finite_count(const Grid4<float>& g) {
  return static_cast<std::size_t>(std::count_if(g.vec().begin(), g.vec().end(), [](float v) { return std::isfinite(v); }));
}

void check_alignment(const Network<float>& net, const DatasetPair& data) {
  data.validate();
  const Shape4 out = net.output_shape({1, data.coarse.h, data.coarse.w, 1});
  if (out.h != data.fine.h || out.w != data.fine.w)
    throw ShapeError("network maps " + std::to_string(data.coarse.h) + "x" + std::to_string(data.coarse.w) + " to " +
                     std::to_string(out.h) + "x" + std::to_string(out.w) + " but the fine grid is " +
                     std::to_string(data.fine.h) + "x" + std::to_string(data.fine.w));
}

}  // namespace

double evaluate_loss(Network<float>& net, const DatasetPair& data, const NormStats& stats, std::size_t batch_size) {
  check_alignment(net, data);
  const Grid4<float> x = normalize_input(data.coarse, stats);
  const Grid4<float> y = normalize_target(data.fine, stats);
  const auto times = data.coarse.time_points();
  double sum = 0;
  std::size_t count = 0;
  std::vector<std::size_t> idx(data.steps());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t first = 0; first < idx.size(); first += batch_size) {
    const std::size_t len = std::min(batch_size, idx.size() - first);
    Batch b = gather(x, y, times, std::span(idx).subspan(first, len), net.temporal());
    Tape<float> tape(Mode::infer);
    const Var out = net.forward(tape, tape.leaf(std::move(b.x)), b.t);
    const std::size_t n = finite_count(b.y);
    sum += masked_mse_value(tape.value(out).data(), b.y.data()) * static_cast<double>(n);
    count += n;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

FitResult fit(Network<float>& net, const DatasetPair& train_in, const TrainConfig& cfg, const DatasetPair* validation,
              const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_in.steps() == 0) throw ConfigError("fit: empty training data");
  DatasetPair train = train_in;
  std::optional<DatasetPair> held_out;
  if (validation) {
    held_out = *validation;
  } else if (cfg.validation_split > 0) {
    const auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_split * static_cast<double>(train.steps())));
    if (n_val > 0 && n_val < train.steps()) {
      auto parts = split_by_time(train_in, n_val);
      train = std::move(parts.first);
      held_out = std::move(parts.second);
    }
  }
  check_alignment(net, train);
  if (held_out) check_alignment(net, *held_out);

  FitResult result;
  result.stats = NormStats::compute(train);
  const Grid4<float> x = normalize_input(train.coarse, result.stats);
  const Grid4<float> y = normalize_target(train.fine, result.stats);
  const auto times = train.coarse.time_points();

  Rng rng(cfg.seed);
  AdamState adam;
  const AdamConfig adam_cfg{cfg.learning_rate, 0.9, 0.999, 1e-8};
  std::vector<std::size_t> order(train.steps());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double sum = 0;
    std::size_t count = 0;
    for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - first);
      Batch b = gather(x, y, times, std::span(order).subspan(first, len), net.temporal());
      Tape<float> tape(Mode::train, rng());
      const Var out = net.forward(tape, tape.leaf(std::move(b.x)), b.t);
      const Var loss = ops::masked_mse(tape, out, b.y);
      const double value = tape.value(loss)[0];
      if (!std::isfinite(value)) throw NumericError("fit: non-finite loss at epoch " + std::to_string(epoch));
      net.params().zero_grad();
      tape.backward(loss);
      adam_step(net.params(), adam, adam_cfg);
      ++result.trace.steps_taken;
      const std::size_t n = finite_count(b.y);
      sum += value * static_cast<double>(n);
      count += n;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = count == 0 ? 0.0 : sum / static_cast<double>(count);
    rec.val_loss = held_out ? evaluate_loss(net, *held_out, result.stats) : std::numeric_limits<double>::quiet_NaN();
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.trace.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

std::vector<bool> nan_footprint(const GridSeries& coarse, std::size_t fine_h, std::size_t fine_w) {
  const auto ty = kernels::half_pixel_taps(coarse.h, fine_h);
  const auto tx = kernels::half_pixel_taps(coarse.w, fine_w);
  std::vector<bool> mask(coarse.steps() * fine_h * fine_w, false);
  for (std::size_t k = 0; k < coarse.steps(); ++k)
    for (std::size_t y = 0; y < fine_h; ++y)
      for (std::size_t x = 0; x < fine_w; ++x) {
        bool hit = false;
        const std::size_t rows[2] = {ty.lo[y], ty.hi[y]};
        const double wr[2] = {ty.w_lo[y], ty.w_hi[y]};
        const std::size_t cols[2] = {tx.lo[x], tx.hi[x]};
        const double wc[2] = {tx.w_lo[x], tx.w_hi[x]};
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            if (wr[a] * wc[b] > 0 && std::isnan(coarse.at(k, rows[a], cols[b]))) hit = true;
        mask[(k * fine_h + y) * fine_w + x] = hit;
      }
  return mask;
}

GridSeries predict(Network<float>& net, const NormStats& stats, const GridSeries& coarse, std::span<const double> times,
                   std::size_t batch_size) {
  coarse.validate();
  if (net.temporal() && times.size() != coarse.steps())
    throw UsageError("predict: temporal model requires one time point per coarse step");
  const Shape4 out_shape = net.output_shape({coarse.steps(), coarse.h, coarse.w, 1});
  GridSeries out(out_shape.h, out_shape.w, coarse.times);
  if (coarse.steps() == 0) return out;
  const Grid4<float> x = normalize_input(coarse, stats);
  const std::size_t ys = out.cells();
  for (std::size_t first = 0; first < coarse.steps(); first += batch_size) {
    const std::size_t len = std::min(batch_size, coarse.steps() - first);
    Tape<float> tape(Mode::infer);
    const Var in = tape.leaf(x.slice_batch(first, len));
    std::span<const double> t;
    if (net.temporal()) t = times.subspan(first, len);
    const Var y = net.forward(tape, in, t);
    const auto& v = tape.value(y);
    for (std::size_t i = 0; i < len * ys; ++i)
      out.data[first * ys + i] = static_cast<float>(denormalize_fine(v[i], stats));
  }
  const auto mask = nan_footprint(coarse, out.h, out.w);
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.data[i] = std::numeric_limits<float>::quiet_NaN();
  return out;
}

GridSeries predict(const TrainedModel& model, const GridSeries& coarse, bool use_times) {
  if (model.kind == ModelKind::bcsd) {
    if (!model.bcsd) throw UsageError("predict: BCSD model has no fitted map");
    return bcsd_predict(*model.bcsd, coarse);
  }
  if (!model.network) throw UsageError("predict: model has no network");
  if (coarse.h != model.coarse_h || coarse.w != model.coarse_w)
    throw ShapeError("predict: coarse input " + std::to_string(coarse.h) + "x" + std::to_string(coarse.w) +
                     " does not match the model's " + std::to_string(model.coarse_h) + "x" +
                     std::to_string(model.coarse_w));
  if (model.temporal() && !use_times) throw UsageError("predict: temporal model requires time points");
  const auto times = coarse.time_points();
  return predict(*model.network, model.stats, coarse, times);
}

}  // namespace sdown
