#include "sdown/bcsd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdown/ops.hpp"

namespace sdown {

void BcsdConfig::validate() const {
  if (method != "bilinear" && method != "nearest")
    throw ConfigError("bcsd: unknown interpolation method '" + method + "' (bilinear or nearest)");
  if (n_quantiles < 1) throw ConfigError("bcsd: n_quantiles must be >= 1");
  if (reference_period && reference_period->first > reference_period->second)
    throw ConfigError("bcsd: reference_period start is after its end");
}

std::vector<double> quantile_levels(std::size_t n) {
  std::vector<double> levels(n);
  for (std::size_t i = 0; i < n; ++i) levels[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  return levels;
}

double empirical_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double map_value(const CellQuantiles& cell, double v, bool extrapolate) {
  if (!cell.valid || std::isnan(v)) return v;
  const auto& q = cell.coarse;
  const auto& tq = cell.target;
  const std::size_t n = q.size();
  if (v < q.front()) return extrapolate ? v + (tq.front() - q.front()) : tq.front();
  if (v > q.back()) return extrapolate ? v + (tq.back() - q.back()) : tq.back();
  const auto lo = static_cast<std::size_t>(std::lower_bound(q.begin(), q.end(), v) - q.begin());
  if (q[lo] == v) {
    std::size_t hi = lo;
    while (hi + 1 < n && q[hi + 1] == v) ++hi;
    double sum = 0;
    for (std::size_t i = lo; i <= hi; ++i) sum += tq[i];
    return sum / static_cast<double>(hi - lo + 1);
  }
  const double frac = (v - q[lo - 1]) / (q[lo] - q[lo - 1]);
  return tq[lo - 1] + frac * (tq[lo] - tq[lo - 1]);
}

namespace {

void moments(const std::vector<double>& values, double& mean, double& sd) {
  if (values.empty()) {
    mean = 0;
    sd = 1;
    return;
  }
  double s = 0;
  for (double v : values) s += v;
  mean = s / static_cast<double>(values.size());
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  sd = std::sqrt(ss / static_cast<double>(values.size()));
  // A constant field cannot be standardised; fall back to centring only.
  if (!(sd > 0)) sd = 1;
}

}  // namespace

BcsdModel bcsd_fit(const GridSeries& coarse_train, const GridSeries& fine_train, const BcsdConfig& config) {
  config.validate();
  DatasetPair pair{coarse_train, fine_train, ""};
  pair.validate();
  const GridSeries target = block_coarsen(fine_train, pair.block_factor());

  std::vector<std::size_t> steps;
  for (std::size_t k = 0; k < coarse_train.steps(); ++k) {
    const auto t = coarse_train.times[k];
    if (!config.reference_period || (t >= config.reference_period->first && t <= config.reference_period->second))
      steps.push_back(k);
  }
  if (steps.empty()) throw ConfigError("bcsd: reference_period selects no training steps");

  BcsdModel model;
  model.config = config;
  model.coarse_h = coarse_train.h;
  model.coarse_w = coarse_train.w;
  model.fine_h = fine_train.h;
  model.fine_w = fine_train.w;

  if (config.normalize) {
    std::vector<double> cv, tv;
    for (std::size_t k : steps)
      for (std::size_t p = 0; p < coarse_train.cells(); ++p) {
        const float c = coarse_train.data[k * coarse_train.cells() + p];
        const float f = target.data[k * target.cells() + p];
        if (std::isfinite(c)) cv.push_back(c);
        if (std::isfinite(f)) tv.push_back(f);
      }
    moments(cv, model.coarse_mean, model.coarse_std);
    moments(tv, model.target_mean, model.target_std);
  }

  model.map.levels = quantile_levels(config.n_quantiles);
  model.map.cells.resize(coarse_train.cells());
  for (std::size_t p = 0; p < coarse_train.cells(); ++p) {
    std::vector<double> cs, ts;
    for (std::size_t k : steps) {
      const float c = coarse_train.data[k * coarse_train.cells() + p];
      const float f = target.data[k * target.cells() + p];
      if (std::isfinite(c)) cs.push_back((c - model.coarse_mean) / model.coarse_std);
      if (std::isfinite(f)) ts.push_back((f - model.target_mean) / model.target_std);
    }
    auto& cell = model.map.cells[p];
    if (cs.empty() || ts.empty()) continue;  // flagged: identity
    std::sort(cs.begin(), cs.end());
    std::sort(ts.begin(), ts.end());
    cell.valid = true;
    for (double level : model.map.levels) {
      cell.coarse.push_back(empirical_quantile(cs, level));
      cell.target.push_back(empirical_quantile(ts, level));
    }
  }
  return model;
}

double bcsd_correct_value(const BcsdModel& model, std::size_t cell, double v) {
  const auto& q = model.map.cells.at(cell);
  if (!q.valid) return v;
  const double z = (v - model.coarse_mean) / model.coarse_std;
  return map_value(q, z, model.config.extrapolate) * model.target_std + model.target_mean;
}

Grid4<double> bcsd_correct(const BcsdModel& model, const Grid4<double>& coarse_new) {
  if (coarse_new.h() != model.coarse_h || coarse_new.w() != model.coarse_w || coarse_new.c() != 1)
    throw ShapeError("bcsd: input grid " + coarse_new.shape().str() + " does not match fitted grid " +
                     std::to_string(model.coarse_h) + "x" + std::to_string(model.coarse_w));
  Grid4<double> out = coarse_new;
  const std::size_t cells = model.coarse_h * model.coarse_w;
  for (std::size_t k = 0; k < coarse_new.n(); ++k)
    for (std::size_t p = 0; p < cells; ++p) out[k * cells + p] = bcsd_correct_value(model, p, coarse_new[k * cells + p]);
  return out;
}

Grid4<double> bcsd_predict(const BcsdModel& model, const Grid4<double>& coarse_new) {
  const Grid4<double> corrected = bcsd_correct(model, coarse_new);
  if (model.config.method == "nearest") {
    const std::size_t sy = model.fine_h / model.coarse_h, sx = model.fine_w / model.coarse_w;
    Grid4<double> out({corrected.n(), model.fine_h, model.fine_w, 1});
    for (std::size_t k = 0; k < corrected.n(); ++k)
      for (std::size_t y = 0; y < model.fine_h; ++y)
        for (std::size_t x = 0; x < model.fine_w; ++x) out.at(k, y, x, 0) = corrected.at(k, y / sy, x / sx, 0);
    return out;
  }
  return ops::bilinear(corrected, model.fine_h, model.fine_w);
}

GridSeries bcsd_predict(const BcsdModel& model, const GridSeries& coarse_new) {
  coarse_new.validate();
  if (coarse_new.h != model.coarse_h || coarse_new.w != model.coarse_w)
    throw ShapeError("bcsd: input grid " + std::to_string(coarse_new.h) + "x" + std::to_string(coarse_new.w) +
                     " does not match fitted grid " + std::to_string(model.coarse_h) + "x" +
                     std::to_string(model.coarse_w));
  if (coarse_new.steps() == 0) return GridSeries(model.fine_h, model.fine_w, {});
  const Grid4<double> fine = bcsd_predict(model, coarse_new.as_grid().cast<double>());
  return GridSeries::from_grid(fine.cast<float>(), coarse_new.times);
}

}  // namespace sdown
