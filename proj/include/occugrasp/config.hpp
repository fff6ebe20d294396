#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "occugrasp/model.hpp"
#include "occugrasp/train.hpp"

namespace occugrasp {

/// Malformed config line, unknown key, or unparsable value.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses `key = value` lines. '#' starts a comment; blank lines are skipped.
KeyValues parse_config_text(const std::string& text);
/// Throws IoError if the file cannot be read.
KeyValues read_config_file(const std::string& path);

/// Every accepted key, in the order defaults are logged.
const std::vector<std::string>& config_keys();

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::size_t candidates = 1024;  // grasp candidates at inference
  std::string profile = "tiny";
  std::map<std::string, std::string> source;  // key -> default | profile | file | flag | env
};

/// Value of `key` in `c`, formatted as it would be written in a file.
std::string config_value(const RunConfig& c, const std::string& key);

/// Merges defaults <- profile <- file <- flags. The seed falls back to
/// `env_seed` (OCCUGRASP_SEED) when neither file nor flags set it. Keys
/// left at their default are listed on `log`.
RunConfig resolve_config(const KeyValues& file, const KeyValues& flags, const char* env_seed = nullptr,
                         std::ostream* log = nullptr);

/// Profiles: "tiny" (CPU-sized widths) and "full" (wide channels, 64x64 planes).
void apply_profile(RunConfig& c, const std::string& name);

std::string config_text(const RunConfig& c);

}  // namespace occugrasp
