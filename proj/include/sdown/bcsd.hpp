#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdown/data_io.hpp"

namespace sdown {

struct BcsdConfig {
  // Spatial disaggregation: "bilinear" or "nearest".
  std::string method = "bilinear";
  std::size_t n_quantiles = 100;
  // Inclusive [first, last] time indices used to build the quantiles; all steps when unset.
  std::optional<std::pair<std::int64_t, std::int64_t>> reference_period;
  bool extrapolate = true;
  bool normalize = true;

  void validate() const;
};

// Quantile pair for one coarse cell: coarse-series quantiles and the matching
// quantiles of the block-averaged fine series. An all-NaN cell is invalid and
// maps values through unchanged.
struct CellQuantiles {
  bool valid = false;
  std::vector<double> coarse;
  std::vector<double> target;
};

struct QuantileMap {
  // (i - 0.5) / n_quantiles, i = 1..n_quantiles
  std::vector<double> levels;
  std::vector<CellQuantiles> cells;  // row-major over the coarse grid
};

struct BcsdModel {
  BcsdConfig config;
  QuantileMap map;
  std::size_t coarse_h = 0, coarse_w = 0, fine_h = 0, fine_w = 0;
  // z-score stats applied before mapping (identity when normalize is false).
  double coarse_mean = 0, coarse_std = 1, target_mean = 0, target_std = 1;
};

std::vector<double> quantile_levels(std::size_t n);

// Linear-interpolation sample quantile of sorted data: position (m - 1) p.
double empirical_quantile(std::span<const double> sorted, double p);

// Quantile lookup for one cell, in the mapping's (possibly normalised) units.
// Inside the coarse quantile range the map is piecewise linear; a run of tied
// coarse quantiles maps to the mean of the matching target quantiles. Outside
// it, a constant shift (extrapolate) or a clamp to the extreme target quantile.
double map_value(const CellQuantiles& cell, double v, bool extrapolate);

BcsdModel bcsd_fit(const GridSeries& coarse_train, const GridSeries& fine_train, const BcsdConfig& config);

// Corrects one coarse value of cell `cell` in original units.
double bcsd_correct_value(const BcsdModel& model, std::size_t cell, double v);

// Quantile-maps every coarse cell, then interpolates to the fine grid.
// Double-precision core on (steps, coarse_h, coarse_w, 1) grids.
Grid4<double> bcsd_correct(const BcsdModel& model, const Grid4<double>& coarse_new);
Grid4<double> bcsd_predict(const BcsdModel& model, const Grid4<double>& coarse_new);
GridSeries bcsd_predict(const BcsdModel& model, const GridSeries& coarse_new);

}  // namespace sdown
