#include "sdown/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace sdown {

std::string MetricsReport::csv_row(const std::string& method) const {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%zu", method.c_str(), mae, rmse, kge, r, alpha,
                beta, n_valid);
  return buf;
}

double kge_from_components(double r, double alpha, double beta) {
  return 1.0 - std::sqrt((r - 1) * (r - 1) + (alpha - 1) * (alpha - 1) + (beta - 1) * (beta - 1));
}

MetricsReport evaluate(std::span<const float> pred, std::span<const float> obs) {
  if (pred.size() != obs.size())
    throw ShapeError("evaluate: prediction has " + std::to_string(pred.size()) + " values, observations " +
                     std::to_string(obs.size()));
  MetricsReport rep;
  double sum_abs = 0, sum_sq = 0, sp = 0, so = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (!std::isfinite(obs[i]) || !std::isfinite(pred[i])) continue;
    const double d = static_cast<double>(pred[i]) - static_cast<double>(obs[i]);
    sum_abs += std::abs(d);
    sum_sq += d * d;
    sp += pred[i];
    so += obs[i];
    ++n;
  }
  rep.n_valid = n;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (n == 0) {
    rep.mae = rep.rmse = rep.kge = rep.r = rep.alpha = rep.beta = nan;
    rep.kge_note = "no valid observations";
    return rep;
  }
  const double dn = static_cast<double>(n);
  rep.mae = sum_abs / dn;
  rep.rmse = std::sqrt(sum_sq / dn);

  const double mp = sp / dn, mo = so / dn;
  double vp = 0, vo = 0, cov = 0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (!std::isfinite(obs[i]) || !std::isfinite(pred[i])) continue;
    const double a = pred[i] - mp, b = obs[i] - mo;
    vp += a * a;
    vo += b * b;
    cov += a * b;
  }
  const double sdp = std::sqrt(vp / dn), sdo = std::sqrt(vo / dn);
  if (sdo == 0 || mo == 0) {
    rep.kge = rep.r = rep.alpha = rep.beta = nan;
    rep.kge_note = sdo == 0 ? "observations have zero variance" : "observations have zero mean";
    if (mo != 0) rep.beta = mp / mo;
    return rep;
  }
  rep.r = sdp == 0 ? 0.0 : cov / std::sqrt(vp * vo);
  rep.alpha = sdp / sdo;
  rep.beta = mp / mo;
  rep.kge = kge_from_components(rep.r, rep.alpha, rep.beta);
  return rep;
}

MetricsReport evaluate(const GridSeries& pred, const GridSeries& obs) {
  if (pred.h != obs.h || pred.w != obs.w || pred.steps() != obs.steps())
    throw ShapeError("evaluate: prediction " + std::to_string(pred.h) + "x" + std::to_string(pred.w) + "x" +
                     std::to_string(pred.steps()) + " does not align with observations " + std::to_string(obs.h) +
                     "x" + std::to_string(obs.w) + "x" + std::to_string(obs.steps()));
  return evaluate(std::span<const float>(pred.data), std::span<const float>(obs.data));
}

GridSeries mae_map(const GridSeries& pred, const GridSeries& obs) {
  if (pred.h != obs.h || pred.w != obs.w || pred.steps() != obs.steps())
    throw ShapeError("mae_map: prediction and observation sequences do not align");
  GridSeries out(obs.h, obs.w, {0});
  for (std::size_t y = 0; y < obs.h; ++y)
    for (std::size_t x = 0; x < obs.w; ++x) {
      double sum = 0;
      std::size_t n = 0;
      for (std::size_t t = 0; t < obs.steps(); ++t) {
        const float o = obs.at(t, y, x), p = pred.at(t, y, x);
        if (!std::isfinite(o) || !std::isfinite(p)) continue;
        sum += std::abs(static_cast<double>(p) - static_cast<double>(o));
        ++n;
      }
      out.at(0, y, x) = n == 0 ? std::numeric_limits<float>::quiet_NaN() : static_cast<float>(sum / static_cast<double>(n));
    }
  return out;
}

}  // namespace sdown
