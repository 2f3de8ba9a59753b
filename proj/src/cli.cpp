#include "sdown/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sdown/errors.hpp"
#include "sdown/metrics.hpp"
#include "sdown/model_io.hpp"
#include "sdown/synth.hpp"

namespace sdown::cli {

const std::vector<ParamInfo>& train_parameters() {
  static const std::vector<ParamInfo> params = {
      {"num_residual_blocks", "3", "SRDRN residual blocks"},
      {"num_res_block_filters", "64", "SRDRN residual block filters"},
      {"upscaling_filters", "64,32,16,8,4,2", "SRDRN filters per upsampling block, taken in order"},
      {"initial_filters", "16", "UNet initial feature-extraction filters"},
      {"initial_layers", "1", "UNet initial feature-extraction layers"},
      {"filters", "32,64,128", "UNet filters per encoder/decoder level"},
      {"bottleneck_filters", "0", "UNet bottleneck filters (0 = twice the last level)"},
      {"kernel_sizes", "3x3", "UNet kernel per level (one entry applies to all levels)"},
      {"dropout_rate", "0", "UNet dropout rate before temporal fusion"},
      {"cos_sin_transform", "false", "sinusoidal time encoding instead of radial basis functions"},
      {"cyclical_period", "365", "cyclical period of the time index"},
      {"temporal_basis", "9,17,37", "radial basis functions per resolution level"},
      {"temporal_layers", "32,64,128", "temporal dense hidden layers"},
      {"temporal_cnn_filters", "8,16", "temporal CNN filters"},
      {"temporal_cnn_kernel_sizes", "3x3,3x3", "temporal CNN kernel sizes"},
      {"learning_rate", "0.001", "Adam learning rate"},
      {"epochs", "10", "training epochs"},
      {"batch_size", "32", "mini-batch size"},
      {"loss", "mse", "loss (mse)"},
      {"optimizer", "adam", "optimizer (adam)"},
      {"activation", "relu", "hidden activation (relu)"},
      {"validation_split", "0", "trailing fraction of training steps held out when no validation data is given"},
      {"shuffle", "true", "shuffle mini-batches every epoch"},
      {"method", "bilinear", "BCSD spatial interpolation (bilinear or nearest)"},
      {"n_quantiles", "100", "BCSD quantile levels"},
      {"reference_period", "", "BCSD quantile period as first,last time index (empty = all)"},
      {"extrapolate", "true", "BCSD constant-shift extrapolation outside the training range"},
      {"normalize", "true", "BCSD standardisation before quantile mapping"},
      {"seed", "42", "random seed for initialisation, shuffling and dropout"},
  };
  return params;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool known_parameter(const std::string& key) {
  const auto& ps = train_parameters();
  return std::any_of(ps.begin(), ps.end(), [&](const ParamInfo& p) { return p.name == key; });
}

using Values = std::map<std::string, std::string>;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": '" + s + "' is not a number");
}

std::int64_t to_int(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": '" + s + "' is not an integer");
}

std::size_t to_size(const std::string& key, const std::string& s) {
  const auto v = to_int(key, s);
  if (v < 0) throw ConfigError(key + ": must be non-negative, got " + s);
  return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& key, std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key + ": '" + s + "' is not a boolean");
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(s)) out.push_back(to_size(key, item));
  return out;
}

std::vector<KernelSize> to_kernels(const std::string& key, const std::string& s) {
  std::vector<KernelSize> out;
  for (const auto& item : split_list(s)) {
    const auto x = item.find_first_of("xX");
    if (x == std::string::npos) {
      const auto k = to_size(key, item);
      out.push_back({k, k});
    } else {
      out.push_back({to_size(key, item.substr(0, x)), to_size(key, item.substr(x + 1))});
    }
  }
  return out;
}

GridSeries read_series(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") return read_grid_csv(path);
  return read_grid_file(path);
}

void override_times(GridSeries& series, const std::string& path, const std::string& what) {
  if (path.empty()) return;
  auto times = read_time_points(path);
  if (times.size() != series.steps())
    throw ShapeError(what + ": " + std::to_string(times.size()) + " time points for " +
                     std::to_string(series.steps()) + " steps");
  series.times = std::move(times);
}

TemporalModuleSpec temporal_spec(const Values& v) {
  TemporalModuleSpec t;
  t.encoding.kind = to_bool("cos_sin_transform", v.at("cos_sin_transform")) ? EncodingKind::sinusoidal
                                                                             : EncodingKind::rbf;
  t.encoding.cyclical_period = to_double("cyclical_period", v.at("cyclical_period"));
  t.encoding.domain_length = t.encoding.cyclical_period;
  t.encoding.resolution_levels = to_sizes("temporal_basis", v.at("temporal_basis"));
  t.encoding.seasonal_wrap = true;
  t.hidden_layers = to_sizes("temporal_layers", v.at("temporal_layers"));
  t.cnn_filters = to_sizes("temporal_cnn_filters", v.at("temporal_cnn_filters"));
  t.cnn_kernels = to_kernels("temporal_cnn_kernel_sizes", v.at("temporal_cnn_kernel_sizes"));
  return t;
}

TrainConfig train_config(const Values& v) {
  TrainConfig c;
  c.learning_rate = to_double("learning_rate", v.at("learning_rate"));
  c.epochs = to_size("epochs", v.at("epochs"));
  c.batch_size = to_size("batch_size", v.at("batch_size"));
  c.loss = v.at("loss");
  c.optimizer = v.at("optimizer");
  c.seed = static_cast<std::uint64_t>(to_size("seed", v.at("seed")));
  c.shuffle = to_bool("shuffle", v.at("shuffle"));
  c.validation_split = to_double("validation_split", v.at("validation_split"));
  if (v.at("activation") != "relu") throw ConfigError("activation: only 'relu' is supported, got '" + v.at("activation") + "'");
  c.validate();
  return c;
}

BcsdConfig bcsd_config(const Values& v) {
  BcsdConfig c;
  c.method = v.at("method");
  c.n_quantiles = to_size("n_quantiles", v.at("n_quantiles"));
  c.extrapolate = to_bool("extrapolate", v.at("extrapolate"));
  c.normalize = to_bool("normalize", v.at("normalize"));
  const auto period = split_list(v.at("reference_period"));
  if (period.size() == 2) {
    c.reference_period = std::pair{to_int("reference_period", period[0]), to_int("reference_period", period[1])};
  } else if (!period.empty()) {
    throw ConfigError("reference_period: expected first,last");
  }
  c.validate();
  return c;
}

std::unique_ptr<Network<float>> build_network(ModelKind kind, const Values& v, const DatasetPair& data,
                                              bool temporal) {
  const std::uint64_t seed = static_cast<std::uint64_t>(to_size("seed", v.at("seed")));
  if (kind == ModelKind::srdrn) {
    SrdrnSpec s;
    s.num_residual_blocks = to_size("num_residual_blocks", v.at("num_residual_blocks"));
    s.res_block_filters = to_size("num_res_block_filters", v.at("num_res_block_filters"));
    s.upscaling_filters = to_sizes("upscaling_filters", v.at("upscaling_filters"));
    s.upscale_factor = data.block_factor();
    s.coarse_h = data.coarse.h;
    s.coarse_w = data.coarse.w;
    s.seed = seed;
    if (temporal) s.temporal = temporal_spec(v);
    return std::make_unique<Srdrn<float>>(s);
  }
  UnetSpec s;
  s.target_h = data.fine.h;
  s.target_w = data.fine.w;
  s.initial_filters = to_size("initial_filters", v.at("initial_filters"));
  s.initial_layers = to_size("initial_layers", v.at("initial_layers"));
  s.encoder_filters = to_sizes("filters", v.at("filters"));
  s.bottleneck_filters = to_size("bottleneck_filters", v.at("bottleneck_filters"));
  s.kernel_sizes = to_kernels("kernel_sizes", v.at("kernel_sizes"));
  if (s.kernel_sizes.size() == 1) s.kernel_sizes.assign(s.encoder_filters.size(), s.kernel_sizes.front());
  s.dropout_rate = to_double("dropout_rate", v.at("dropout_rate"));
  s.seed = seed;
  if (temporal) s.temporal = temporal_spec(v);
  return std::make_unique<Unet<float>>(s);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path + " for writing");
  f << text;
  if (!f) throw FormatError("failed writing " + path);
}

struct TrainArgs {
  std::string model = "srdrn", coarse, fine, out, trace, val_coarse, val_fine, config;
  std::string time_points, val_time_points;
  bool time_aware = false;
  Values values;
};

int cmd_train(TrainArgs& a, std::ostream& out) {
  const ModelKind kind = model_kind_from_string(a.model);
  DatasetPair train{read_series(a.coarse), read_series(a.fine), ""};
  override_times(train.coarse, a.time_points, "--time-points");
  override_times(train.fine, a.time_points, "--time-points");
  train.validate();

  std::optional<DatasetPair> val;
  if (!a.val_coarse.empty() || !a.val_fine.empty()) {
    if (a.val_coarse.empty() || a.val_fine.empty())
      throw UsageError("--val-coarse and --val-fine must be given together");
    val = DatasetPair{read_series(a.val_coarse), read_series(a.val_fine), ""};
    override_times(val->coarse, a.val_time_points, "--val-time-points");
    override_times(val->fine, a.val_time_points, "--val-time-points");
    val->validate();
    if (val->coarse.h != train.coarse.h || val->coarse.w != train.coarse.w || val->fine.h != train.fine.h ||
        val->fine.w != train.fine.w)
      throw ShapeError("validation grids do not match the training grids");
  }

  TrainedModel model;
  model.kind = kind;
  model.coarse_h = train.coarse.h;
  model.coarse_w = train.coarse.w;
  model.fine_h = train.fine.h;
  model.fine_w = train.fine.w;
  TrainingTrace trace;

  if (kind == ModelKind::bcsd) {
    model.bcsd = bcsd_fit(train.coarse, train.fine, bcsd_config(a.values));
    out << "bcsd: fitted " << model.bcsd->config.n_quantiles << " quantiles per cell over " << train.steps()
        << " steps\n";
  } else {
    const TrainConfig cfg = train_config(a.values);
    model.network = build_network(kind, a.values, train, a.time_aware);
    out << to_string(kind) << (a.time_aware ? " (time-aware)" : "") << ": " << model.network->params().count()
        << " parameters\n";
    auto result = fit(*model.network, train, cfg, val ? &*val : nullptr, [&](const EpochRecord& e) {
      out << "epoch " << e.epoch << "/" << cfg.epochs << " train_loss " << e.train_loss;
      if (!std::isnan(e.val_loss)) out << " val_loss " << e.val_loss;
      out << "\n";
    });
    model.stats = result.stats;
    trace = std::move(result.trace);
  }
  save_model_file(a.out, model);
  write_text(a.trace.empty() ? a.out + ".trace.csv" : a.trace, trace.to_csv());
  return kSuccess;
}

struct PredictArgs {
  std::string model, coarse, out, time_points;
  bool time_aware = false;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const TrainedModel model = load_model_file(a.model);
  GridSeries coarse = read_series(a.coarse);
  override_times(coarse, a.time_points, "--time-points");
  if (coarse.h != model.coarse_h || coarse.w != model.coarse_w)
    throw ShapeError("coarse input is " + std::to_string(coarse.h) + "x" + std::to_string(coarse.w) +
                     " but the model expects " + std::to_string(model.coarse_h) + "x" + std::to_string(model.coarse_w));
  if (model.temporal() && !a.time_aware)
    throw UsageError("time-aware model: --time-points is required");
  const GridSeries fine = predict(model, coarse, a.time_aware);
  write_grid_file(a.out, fine);
  out << "wrote " << fine.steps() << " steps of " << fine.h << "x" << fine.w << " to " << a.out << "\n";
  return kSuccess;
}

struct EvaluateArgs {
  std::string pred, truth, metrics, mae_map, label = "model";
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const GridSeries pred = read_series(a.pred);
  const GridSeries truth = read_series(a.truth);
  if (pred.h != truth.h || pred.w != truth.w || pred.steps() != truth.steps())
    throw ShapeError("prediction (" + std::to_string(pred.steps()) + " x " + std::to_string(pred.h) + "x" +
                     std::to_string(pred.w) + ") does not align with truth (" + std::to_string(truth.steps()) +
                     " x " + std::to_string(truth.h) + "x" + std::to_string(truth.w) + ")");
  const auto report = evaluate(pred, truth);
  const std::string csv = MetricsReport::csv_header() + "\n" + report.csv_row(a.label) + "\n";
  if (a.metrics.empty()) out << csv;
  else write_text(a.metrics, csv);
  if (!report.kge_note.empty()) out << "note: " << report.kge_note << "\n";
  if (!a.mae_map.empty()) write_grid_file(a.mae_map, mae_map(pred, truth));
  return kSuccess;
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(f, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(n) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (!known_parameter(key)) throw ConfigError(path + ":" + std::to_string(n) + ": unknown key '" + key + "'");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::vector<std::int64_t> read_time_points(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open time points file " + path);
  std::vector<std::int64_t> out;
  std::string tok;
  while (f >> tok) {
    std::stringstream ss(tok);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) out.push_back(to_int("time points", item));
  }
  return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatial downscaling of gridded fields: synthetic data, SRDRN / UNet / BCSD training, prediction, evaluation"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  // synth
  SynthConfig sc;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic fine-resolution field");
  synth->add_option("--out", synth_out, "output grid file")->required();
  synth->add_option("--rows", sc.h, "rows");
  synth->add_option("--cols", sc.w, "columns");
  synth->add_option("--steps", sc.steps, "time steps (t = 1..steps)");
  synth->add_option("--season_period", sc.season_period, "seasonal period");
  synth->add_option("--base_level", sc.base_level, "mean level");
  synth->add_option("--static_amplitude", sc.static_amplitude, "amplitude of the static pattern");
  synth->add_option("--seasonal_amplitude", sc.seasonal_amplitude, "amplitude of the seasonal pattern");
  synth->add_option("--detail_amplitude", sc.detail_amplitude, "amplitude of the sub-block seasonal detail");
  synth->add_option("--detail_block", sc.detail_block, "block size the detail averages out over");
  synth->add_option("--trend", sc.trend, "total trend over the record");
  synth->add_option("--noise_amplitude", sc.noise_amplitude, "per-pixel noise standard deviation");
  synth->add_option("--noise_length", sc.noise_length, "noise smoothing length (pixels)");
  synth->add_option("--n_bumps", sc.n_bumps, "Gaussian bumps per broad pattern");
  synth->add_option("--static_width_min", sc.static_width_min, "smallest static bump width, fraction of min(rows, cols)");
  synth->add_option("--static_width_max", sc.static_width_max, "largest static bump width, fraction of min(rows, cols)");
  synth->add_option("--seed", sc.seed, "random seed");

  // coarsen
  std::string coarsen_in, coarsen_out;
  std::size_t factor = 4;
  auto* coarsen = app.add_subcommand("coarsen", "block-average a fine field to a coarse grid");
  coarsen->add_option("--in", coarsen_in, "input grid file (.csv for t,row,col,value)")->required();
  coarsen->add_option("--out", coarsen_out, "output grid file")->required();
  coarsen->add_option("--factor", factor, "block size");

  // split
  std::string split_in, split_train, split_test;
  std::size_t n_test = 0;
  auto* split = app.add_subcommand("split", "split a sequence into leading train and trailing test parts");
  split->add_option("--in", split_in, "input grid file")->required();
  split->add_option("--n_test", n_test, "trailing steps for the test part")->required();
  split->add_option("--train-out", split_train, "train grid file")->required();
  split->add_option("--test-out", split_test, "test grid file")->required();

  // train
  TrainArgs ta;
  for (const auto& p : train_parameters()) ta.values[p.name] = p.default_value;
  auto* train = app.add_subcommand("train", "train an SRDRN, UNet or BCSD model");
  train->add_option("--model", ta.model, "srdrn, unet or bcsd")->check(CLI::IsMember({"srdrn", "unet", "bcsd"}));
  train->add_option("--coarse", ta.coarse, "coarse training grid file")->required();
  train->add_option("--fine", ta.fine, "fine training grid file")->required();
  train->add_option("--out", ta.out, "output model file")->required();
  train->add_option("--trace", ta.trace, "training trace CSV (default <out>.trace.csv)");
  train->add_option("--val-coarse", ta.val_coarse, "coarse validation grid file");
  train->add_option("--val-fine", ta.val_fine, "fine validation grid file");
  auto* tp_opt = train->add_option("--time-points", ta.time_points,
                                   "build the time-aware variant; optional file of time indices "
                                   "(default: the grid file's time index)")
                     ->expected(0, 1);
  train->add_option("--val-time-points", ta.val_time_points, "file of validation time indices");
  auto* config_opt = train->add_option("--config", ta.config, "key=value file overriding parameter defaults");
  std::map<std::string, CLI::Option*> param_opts;
  for (const auto& p : train_parameters())
    param_opts[p.name] = train->add_option("--" + p.name, ta.values[p.name], p.help)->default_str(p.default_value);

  // predict
  PredictArgs pa;
  auto* pred = app.add_subcommand("predict", "downscale a coarse sequence with a trained model");
  pred->add_option("--model", pa.model, "model file")->required();
  pred->add_option("--coarse", pa.coarse, "coarse grid file")->required();
  pred->add_option("--out", pa.out, "output fine grid file")->required();
  auto* ptp_opt = pred->add_option("--time-points", pa.time_points,
                                   "feed time indices to a time-aware model; optional file "
                                   "(default: the grid file's time index)")
                      ->expected(0, 1);

  // evaluate
  EvaluateArgs ea;
  auto* eval = app.add_subcommand("evaluate", "MAE, RMSE and KGE of a prediction against truth");
  eval->add_option("--pred", ea.pred, "predicted grid file")->required();
  eval->add_option("--truth", ea.truth, "observed grid file")->required();
  eval->add_option("--metrics", ea.metrics, "metrics CSV output (default stdout)");
  eval->add_option("--mae-map", ea.mae_map, "per-pixel MAE grid file output");
  eval->add_option("--label", ea.label, "method column of the metrics row");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    // Subcommand help requests surface here with a zero exit code.
    if (e.get_exit_code() == 0) {
      const CLI::App* sub = nullptr;
      for (const auto* s : app.get_subcommands()) sub = s;
      out << (sub ? sub->help() : app.help());
      return kSuccess;
    }
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (*synth) {
      write_grid_file(synth_out, synth_generate(sc));
      out << "wrote " << sc.steps << " steps of " << sc.h << "x" << sc.w << " to " << synth_out << "\n";
    } else if (*coarsen) {
      write_grid_file(coarsen_out, block_coarsen(read_series(coarsen_in), factor));
    } else if (*split) {
      auto [a, b] = split_by_time(read_series(split_in), n_test);
      write_grid_file(split_train, a);
      write_grid_file(split_test, b);
    } else if (*train) {
      ta.time_aware = tp_opt->count() > 0 || !ta.time_points.empty();
      if (!ta.config.empty() || config_opt->count() > 0)
        for (const auto& [k, v] : read_config_file(ta.config))
          if (param_opts.at(k)->count() == 0) ta.values[k] = v;
      return cmd_train(ta, out);
    } else if (*pred) {
      pa.time_aware = ptp_opt->count() > 0 || !pa.time_points.empty();
      return cmd_predict(pa, out);
    } else if (*eval) {
      return cmd_evaluate(ea, out);
    }
  } catch (const ShapeError& e) {
    err << "shape error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kSuccess;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"sdown"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace sdown::cli
