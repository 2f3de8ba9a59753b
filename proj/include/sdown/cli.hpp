#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace sdown::cli {

enum ExitCode : int { kSuccess = 0, kRuntimeError = 1, kUsageError = 2 };

// Model and training parameters accepted by `train`, with their defaults, in
// help order. Values are kept as strings until the model kind is known.
struct ParamInfo {
  std::string name;
  std::string default_value;
  std::string help;
};
const std::vector<ParamInfo>& train_parameters();

// Parses `key=value` lines ('#' comments, blank lines allowed). Unknown keys
// throw ConfigError.
std::map<std::string, std::string> read_config_file(const std::string& path);

// Integer time indices, separated by whitespace, commas or newlines.
std::vector<std::int64_t> read_time_points(const std::string& path);

// Runs one invocation; argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdown::cli
