#include "sdown/model_io.hpp"

#include <cstring>
#include <fstream>

#include "sdown/data_io.hpp"

namespace sdown {

using nlohmann::json;

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::srdrn: return "srdrn";
    case ModelKind::unet: return "unet";
    case ModelKind::bcsd: return "bcsd";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "srdrn") return ModelKind::srdrn;
  if (name == "unet") return ModelKind::unet;
  if (name == "bcsd") return ModelKind::bcsd;
  throw ConfigError("unknown model '" + name + "' (srdrn, unet or bcsd)");
}

namespace {

json kernels_json(const std::vector<KernelSize>& ks) {
  json out = json::array();
  for (auto k : ks) out.push_back({k.h, k.w});
  return out;
}

std::vector<KernelSize> kernels_from(const json& j) {
  std::vector<KernelSize> out;
  for (const auto& k : j) out.push_back({k.at(0).get<std::size_t>(), k.at(1).get<std::size_t>()});
  return out;
}

}  // namespace

json to_json(const TemporalModuleSpec& s) {
  const auto& e = s.encoding;
  return {{"encoding", e.kind == EncodingKind::sinusoidal ? "sinusoidal" : "rbf"},
          {"cyclical_period", e.cyclical_period},
          {"temporal_basis", e.resolution_levels},
          {"domain_length", e.domain_length},
          {"seasonal_wrap", e.seasonal_wrap},
          {"temporal_layers", s.hidden_layers},
          {"temporal_cnn_filters", s.cnn_filters},
          {"temporal_cnn_kernel_sizes", kernels_json(s.cnn_kernels)},
          {"fusion_h", s.fusion_h},
          {"fusion_w", s.fusion_w}};
}

TemporalModuleSpec temporal_from_json(const json& j) {
  TemporalModuleSpec s;
  s.encoding.kind = j.at("encoding").get<std::string>() == "sinusoidal" ? EncodingKind::sinusoidal : EncodingKind::rbf;
  s.encoding.cyclical_period = j.at("cyclical_period").get<double>();
  s.encoding.resolution_levels = j.at("temporal_basis").get<std::vector<std::size_t>>();
  s.encoding.domain_length = j.at("domain_length").get<double>();
  s.encoding.seasonal_wrap = j.at("seasonal_wrap").get<bool>();
  s.hidden_layers = j.at("temporal_layers").get<std::vector<std::size_t>>();
  s.cnn_filters = j.at("temporal_cnn_filters").get<std::vector<std::size_t>>();
  s.cnn_kernels = kernels_from(j.at("temporal_cnn_kernel_sizes"));
  s.fusion_h = j.at("fusion_h").get<std::size_t>();
  s.fusion_w = j.at("fusion_w").get<std::size_t>();
  return s;
}

json to_json(const SrdrnSpec& s) {
  json j = {{"input_channels", s.input_channels},
            {"output_channels", s.output_channels},
            {"num_residual_blocks", s.num_residual_blocks},
            {"num_res_block_filters", s.res_block_filters},
            {"upscale_factor", s.upscale_factor},
            {"upscaling_filters", s.upscaling_filters},
            {"kernel", {s.kernel.h, s.kernel.w}},
            {"coarse_h", s.coarse_h},
            {"coarse_w", s.coarse_w},
            {"seed", s.seed}};
  j["temporal"] = s.temporal ? to_json(*s.temporal) : json(nullptr);
  return j;
}

SrdrnSpec srdrn_from_json(const json& j) {
  SrdrnSpec s;
  s.input_channels = j.at("input_channels");
  s.output_channels = j.at("output_channels");
  s.num_residual_blocks = j.at("num_residual_blocks");
  s.res_block_filters = j.at("num_res_block_filters");
  s.upscale_factor = j.at("upscale_factor");
  s.upscaling_filters = j.at("upscaling_filters").get<std::vector<std::size_t>>();
  s.kernel = {j.at("kernel").at(0).get<std::size_t>(), j.at("kernel").at(1).get<std::size_t>()};
  s.coarse_h = j.at("coarse_h");
  s.coarse_w = j.at("coarse_w");
  s.seed = j.at("seed");
  if (!j.at("temporal").is_null()) s.temporal = temporal_from_json(j.at("temporal"));
  return s;
}

json to_json(const UnetSpec& s) {
  json j = {{"input_channels", s.input_channels},
            {"output_channels", s.output_channels},
            {"target_h", s.target_h},
            {"target_w", s.target_w},
            {"initial_filters", s.initial_filters},
            {"initial_layers", s.initial_layers},
            {"filters", s.encoder_filters},
            {"bottleneck_filters", s.bottleneck_filters},
            {"kernel_sizes", kernels_json(s.kernel_sizes)},
            {"dropout_rate", s.dropout_rate},
            {"seed", s.seed}};
  j["temporal"] = s.temporal ? to_json(*s.temporal) : json(nullptr);
  return j;
}

UnetSpec unet_from_json(const json& j) {
  UnetSpec s;
  s.input_channels = j.at("input_channels");
  s.output_channels = j.at("output_channels");
  s.target_h = j.at("target_h");
  s.target_w = j.at("target_w");
  s.initial_filters = j.at("initial_filters");
  s.initial_layers = j.at("initial_layers");
  s.encoder_filters = j.at("filters").get<std::vector<std::size_t>>();
  s.bottleneck_filters = j.at("bottleneck_filters");
  s.kernel_sizes = kernels_from(j.at("kernel_sizes"));
  s.dropout_rate = j.at("dropout_rate");
  s.seed = j.at("seed");
  if (!j.at("temporal").is_null()) s.temporal = temporal_from_json(j.at("temporal"));
  return s;
}

namespace {

void put_name(std::ostream& out, const std::string& name) {
  le::put_u16(out, static_cast<std::uint16_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
}

std::string get_name(std::istream& in) {
  const auto len = le::get_u16(in);
  std::string s(len, '\0');
  if (!in.read(s.data(), len)) throw FormatError("model file: truncated buffer name");
  return s;
}

struct Buffer {
  std::string name;
  std::uint8_t dtype = 0;
  std::vector<std::size_t> dims;
  std::vector<double> values;
};

void put_buffer(std::ostream& out, const std::string& name, std::uint8_t dtype, const std::vector<std::size_t>& dims,
                const auto& values) {
  put_name(out, name);
  le::put_u8(out, dtype);
  le::put_u8(out, static_cast<std::uint8_t>(dims.size()));
  for (auto d : dims) le::put_u32(out, static_cast<std::uint32_t>(d));
  for (auto v : values) {
    if (dtype == 0) le::put_f32(out, static_cast<float>(v));
    else le::put_f64(out, static_cast<double>(v));
  }
}

Buffer get_buffer(std::istream& in) {
  Buffer b;
  b.name = get_name(in);
  b.dtype = le::get_u8(in);
  if (b.dtype > 1) throw FormatError("model file: unknown dtype in buffer " + b.name);
  const auto rank = le::get_u8(in);
  std::size_t total = 1;
  for (std::uint8_t i = 0; i < rank; ++i) {
    b.dims.push_back(le::get_u32(in));
    total *= b.dims.back();
  }
  b.values.resize(total);
  for (auto& v : b.values) v = b.dtype == 0 ? static_cast<double>(le::get_f32(in)) : le::get_f64(in);
  return b;
}

json bcsd_json(const BcsdModel& m) {
  json ref = m.config.reference_period ? json{m.config.reference_period->first, m.config.reference_period->second}
                                       : json(nullptr);
  return {{"method", m.config.method},      {"n_quantiles", m.config.n_quantiles},
          {"reference_period", ref},        {"extrapolate", m.config.extrapolate},
          {"normalize", m.config.normalize}, {"coarse_mean", m.coarse_mean},
          {"coarse_std", m.coarse_std},      {"target_mean", m.target_mean},
          {"target_std", m.target_std}};
}

}  // namespace

void save_model(std::ostream& out, const TrainedModel& model) {
  json header = {{"coarse_h", model.coarse_h},
                 {"coarse_w", model.coarse_w},
                 {"fine_h", model.fine_h},
                 {"fine_w", model.fine_w},
                 {"norm",
                  {{"coarse_mean", model.stats.coarse_mean},
                   {"coarse_std", model.stats.coarse_std},
                   {"fine_mean", model.stats.fine_mean},
                   {"fine_std", model.stats.fine_std}}}};
  if (model.kind == ModelKind::srdrn) {
    const auto* net = dynamic_cast<const Srdrn<float>*>(model.network.get());
    if (!net) throw UsageError("save_model: srdrn model without an SRDRN network");
    header["spec"] = to_json(net->spec());
  } else if (model.kind == ModelKind::unet) {
    const auto* net = dynamic_cast<const Unet<float>*>(model.network.get());
    if (!net) throw UsageError("save_model: unet model without a UNet network");
    header["spec"] = to_json(net->spec());
  } else {
    if (!model.bcsd) throw UsageError("save_model: bcsd model without a fitted map");
    header["bcsd"] = bcsd_json(*model.bcsd);
  }
  const std::string text = header.dump();

  out.write(kModelMagic, 4);
  le::put_u16(out, kModelVersion);
  le::put_u8(out, static_cast<std::uint8_t>(model.kind));
  le::put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  if (model.kind == ModelKind::bcsd) {
    const auto& m = *model.bcsd;
    const std::size_t cells = m.map.cells.size(), nq = m.map.levels.size();
    std::vector<double> valid(cells), coarse(cells * nq, 0.0), target(cells * nq, 0.0);
    for (std::size_t p = 0; p < cells; ++p) {
      valid[p] = m.map.cells[p].valid ? 1.0 : 0.0;
      if (!m.map.cells[p].valid) continue;
      std::copy(m.map.cells[p].coarse.begin(), m.map.cells[p].coarse.end(), coarse.begin() + static_cast<std::ptrdiff_t>(p * nq));
      std::copy(m.map.cells[p].target.begin(), m.map.cells[p].target.end(), target.begin() + static_cast<std::ptrdiff_t>(p * nq));
    }
    le::put_u32(out, 4);
    put_buffer(out, "levels", 1, {nq}, m.map.levels);
    put_buffer(out, "valid", 1, {cells}, valid);
    put_buffer(out, "coarse_quantiles", 1, {cells, nq}, coarse);
    put_buffer(out, "target_quantiles", 1, {cells, nq}, target);
    return;
  }
  const auto& ps = model.network->params();
  std::uint32_t count = 0;
  for (const auto& l : ps.layers()) count += static_cast<std::uint32_t>(l.weights.size());
  le::put_u32(out, count);
  for (const auto& l : ps.layers())
    for (const auto& [role, w] : l.weights) put_buffer(out, l.name + "/" + role, 0, w.shape, w.data);
}

TrainedModel load_model(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kModelMagic, 4) != 0) throw FormatError("not a model file (bad magic)");
  const auto version = le::get_u16(in);
  if (version != kModelVersion) throw FormatError("unsupported model file version " + std::to_string(version));
  const auto kind = le::get_u8(in);
  if (kind > 2) throw FormatError("model file: unknown model kind " + std::to_string(kind));
  const auto len = le::get_u32(in);
  std::string text(len, '\0');
  if (!in.read(text.data(), len)) throw FormatError("model file: truncated header");
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file: bad header: ") + e.what());
  }

  TrainedModel model;
  model.kind = static_cast<ModelKind>(kind);
  model.coarse_h = header.at("coarse_h");
  model.coarse_w = header.at("coarse_w");
  model.fine_h = header.at("fine_h");
  model.fine_w = header.at("fine_w");
  const auto& norm = header.at("norm");
  model.stats = {norm.at("coarse_mean"), norm.at("coarse_std"), norm.at("fine_mean"), norm.at("fine_std")};

  const auto count = le::get_u32(in);
  std::vector<Buffer> buffers;
  for (std::uint32_t i = 0; i < count; ++i) buffers.push_back(get_buffer(in));

  if (model.kind == ModelKind::bcsd) {
    const auto& b = header.at("bcsd");
    BcsdModel m;
    m.config.method = b.at("method");
    m.config.n_quantiles = b.at("n_quantiles");
    if (!b.at("reference_period").is_null())
      m.config.reference_period = {b.at("reference_period").at(0).get<std::int64_t>(),
                                   b.at("reference_period").at(1).get<std::int64_t>()};
    m.config.extrapolate = b.at("extrapolate");
    m.config.normalize = b.at("normalize");
    m.coarse_mean = b.at("coarse_mean");
    m.coarse_std = b.at("coarse_std");
    m.target_mean = b.at("target_mean");
    m.target_std = b.at("target_std");
    m.coarse_h = model.coarse_h;
    m.coarse_w = model.coarse_w;
    m.fine_h = model.fine_h;
    m.fine_w = model.fine_w;
    if (buffers.size() != 4) throw FormatError("model file: BCSD needs 4 buffers");
    m.map.levels = buffers[0].values;
    const std::size_t nq = m.map.levels.size(), cells = buffers[1].values.size();
    if (cells != m.coarse_h * m.coarse_w || buffers[2].values.size() != cells * nq ||
        buffers[3].values.size() != cells * nq)
      throw FormatError("model file: BCSD buffers have inconsistent sizes");
    m.map.cells.resize(cells);
    for (std::size_t p = 0; p < cells; ++p) {
      auto& c = m.map.cells[p];
      c.valid = buffers[1].values[p] != 0.0;
      if (!c.valid) continue;
      c.coarse.assign(buffers[2].values.begin() + static_cast<std::ptrdiff_t>(p * nq),
                      buffers[2].values.begin() + static_cast<std::ptrdiff_t>((p + 1) * nq));
      c.target.assign(buffers[3].values.begin() + static_cast<std::ptrdiff_t>(p * nq),
                      buffers[3].values.begin() + static_cast<std::ptrdiff_t>((p + 1) * nq));
    }
    model.bcsd = std::move(m);
    return model;
  }

  if (model.kind == ModelKind::srdrn) model.network = std::make_unique<Srdrn<float>>(srdrn_from_json(header.at("spec")));
  else model.network = std::make_unique<Unet<float>>(unet_from_json(header.at("spec")));

  auto& ps = model.network->params();
  std::size_t next = 0;
  for (auto& l : ps.layers())
    for (auto& [role, w] : l.weights) {
      if (next >= buffers.size()) throw FormatError("model file: missing parameter buffers");
      const auto& b = buffers[next++];
      if (b.name != l.name + "/" + role || b.dims != w.shape)
        throw FormatError("model file: buffer " + b.name + " does not match layer " + l.name + "/" + role);
      for (std::size_t i = 0; i < w.data.size(); ++i) w.data[i] = static_cast<float>(b.values[i]);
    }
  if (next != buffers.size()) throw FormatError("model file: unexpected extra buffers");
  return model;
}

void save_model_file(const std::filesystem::path& path, const TrainedModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  save_model(out, model);
  if (!out) throw FormatError("failed writing " + path.string());
}

TrainedModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return load_model(in);
}

}  // namespace sdown
