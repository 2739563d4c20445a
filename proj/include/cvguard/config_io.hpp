#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cvguard/model.hpp"

namespace cvguard {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses a scenario document. Missing keys keep their defaults; unknown
/// sections or keys, and wrongly typed values, throw ConfigError.
ScenarioConfig scenario_from_json(const nlohmann::json& doc);

/// Full, canonical serialization (every key present). Round-trips through
/// scenario_from_json.
nlohmann::json scenario_to_json(const ScenarioConfig& config);

nlohmann::json read_json_file(const std::filesystem::path& path);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Sets a dotted key ("attack.tx_pps") in a scenario document. The value text
/// is parsed as JSON when possible ("true", "500", "[1,2]"), else kept as a string.
void set_dotted(nlohmann::json& doc, std::string_view dotted_key, std::string_view value_text);

/// 64-bit FNV-1a over the canonical serialization, as 16 hex digits.
std::string config_hash(const ScenarioConfig& config);

}  // namespace cvguard
