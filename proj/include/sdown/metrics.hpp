#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "sdown/data_io.hpp"

namespace sdown {

struct MetricsReport {
  double mae = 0, rmse = 0;
  // NaN when undefined; kge_note then says why.
  double kge = 0, r = 0, alpha = 0, beta = 0;
  std::size_t n_valid = 0;
  std::string kge_note;

  std::string csv_row(const std::string& method) const;
  static std::string csv_header() { return "method,mae,rmse,kge,r,alpha,beta,n_valid"; }
};

// Pooled over every element where obs is finite (and pred is finite).
// KGE = 1 - sqrt((r-1)^2 + (alpha-1)^2 + (beta-1)^2), alpha = sd_pred/sd_obs,
// beta = mean_pred/mean_obs, population moments; r := 0 when sd_pred == 0.
MetricsReport evaluate(std::span<const float> pred, std::span<const float> obs);
MetricsReport evaluate(const GridSeries& pred, const GridSeries& obs);

double kge_from_components(double r, double alpha, double beta);

// Per-pixel temporal mean of |pred - obs| over valid steps; NaN where none.
GridSeries mae_map(const GridSeries& pred, const GridSeries& obs);

}  // namespace sdown
