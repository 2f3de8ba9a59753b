#pragma once

#include <filesystem>
#include <iosfwd>

#include <json.hpp>

#include "sdown/srdrn.hpp"
#include "sdown/training.hpp"
#include "sdown/unet.hpp"

namespace sdown {

// Model container (little-endian):
//   "SDM1" | u16 version (=1) | u8 model kind (0 srdrn, 1 unet, 2 bcsd)
//   | u32 header length | header JSON (architecture spec, norm stats, grid dims, BCSD config)
//   | u32 buffer count
//   | per buffer: u16 name length | name | u8 dtype (0 f32, 1 f64) | u8 rank | u32 dims[rank] | data
// Network buffers are named "<layer>/<role>" in build order.
inline constexpr char kModelMagic[4] = {'S', 'D', 'M', '1'};
inline constexpr std::uint16_t kModelVersion = 1;

nlohmann::json to_json(const TemporalModuleSpec& spec);
TemporalModuleSpec temporal_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SrdrnSpec& spec);
SrdrnSpec srdrn_from_json(const nlohmann::json& j);
nlohmann::json to_json(const UnetSpec& spec);
UnetSpec unet_from_json(const nlohmann::json& j);

void save_model(std::ostream& out, const TrainedModel& model);
TrainedModel load_model(std::istream& in);
void save_model_file(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model_file(const std::filesystem::path& path);

}  // namespace sdown
