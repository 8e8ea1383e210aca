#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coskel/pipeline.hpp"

namespace coskel {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Everything a run reads from a config file: solver settings plus data sources.
struct RunSettings {
  RunConfig run;
  std::filesystem::path data;
  std::filesystem::path out;
  std::string flow_provider = "dense";  // dense | identity
  std::filesystem::path flow_cache;     // empty: no cache
  std::filesystem::path saliency_dir;   // empty: built-in saliency
  bool dump_priors = false;
};

/// Sets one key; throws ConfigError on unknown keys or unparsable values.
void apply_setting(RunSettings& s, const std::string& key, const std::string& value);

/// Flat `key = value` lines; '#' starts a comment.
RunSettings parse_config(std::string_view text, RunSettings base = {});
RunSettings load_config(const std::filesystem::path& path, RunSettings base = {});

/// Every key with its current value, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_entries(const RunSettings& s);
std::uint64_t settings_hash(const RunSettings& s);

}  // namespace coskel
