#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdown/bcsd.hpp"
#include "sdown/data_io.hpp"
#include "sdown/network.hpp"

namespace sdown {

// One mean / standard deviation per field over all finite training values.
struct NormStats {
  double coarse_mean = 0, coarse_std = 1;
  double fine_mean = 0, fine_std = 1;

  static NormStats compute(const DatasetPair& train);
};

// Standardises a coarse sequence into a network input; missing cells become 0
// (the training mean).
Grid4<float> normalize_input(const GridSeries& coarse, const NormStats& stats);
Grid4<float> normalize_target(const GridSeries& fine, const NormStats& stats);
double denormalize_fine(double z, const NormStats& stats);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First and second moments kept in double for every parameter buffer.
struct AdamState {
  std::vector<std::vector<double>> m, v;
  std::size_t step = 0;
};

// Bias-corrected Adam update over every trainable buffer. Throws NumericError
// on a non-finite gradient before touching any parameter.
template <typename T>
void adam_step(ParamSet<T>& params, AdamState& state, const AdamConfig& cfg);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::string optimizer = "adam";
  std::string loss = "mse";
  std::uint64_t seed = 42;
  bool shuffle = true;
  // Fraction of trailing training steps held out for validation when no
  // explicit validation set is given (0 disables).
  double validation_split = 0.0;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0;
  // NaN when no validation data.
  double val_loss = 0;
  double seconds = 0;
};

struct TrainingTrace {
  std::vector<EpochRecord> epochs;

  std::string to_csv() const;
  std::size_t steps_taken = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Masked MSE of pred vs truth (plain value, no tape).
double masked_mse_value(std::span<const float> pred, std::span<const float> truth);

// Mean masked MSE of the network on `data`, in normalised units.
double evaluate_loss(Network<float>& net, const DatasetPair& data, const NormStats& stats,
                     std::size_t batch_size = 64);

struct FitResult {
  NormStats stats;
  TrainingTrace trace;
};

FitResult fit(Network<float>& net, const DatasetPair& train, const TrainConfig& cfg,
              const DatasetPair* validation = nullptr, const EpochCallback& on_epoch = {});

// Trained artifact: a network plus its normalisation, or a fitted BCSD map.
struct TrainedModel {
  ModelKind kind = ModelKind::srdrn;
  std::unique_ptr<Network<float>> network;
  NormStats stats;
  std::optional<BcsdModel> bcsd;
  std::size_t coarse_h = 0, coarse_w = 0, fine_h = 0, fine_w = 0;

  bool temporal() const { return network && network->temporal(); }
};

// Fine-resolution predictions in original units. `times` is required iff the
// model is temporal; NaN coarse cells blank every fine pixel whose bilinear
// footprint touches them.
GridSeries predict(const TrainedModel& model, const GridSeries& coarse, bool use_times);
GridSeries predict(Network<float>& net, const NormStats& stats, const GridSeries& coarse,
                   std::span<const double> times, std::size_t batch_size = 64);

// Fine pixels whose half-pixel bilinear stencil has non-zero weight on a NaN coarse cell.
std::vector<bool> nan_footprint(const GridSeries& coarse, std::size_t fine_h, std::size_t fine_w);

extern template void adam_step<float>(ParamSet<float>&, AdamState&, const AdamConfig&);
extern template void adam_step<double>(ParamSet<double>&, AdamState&, const AdamConfig&);

}  // namespace sdown
