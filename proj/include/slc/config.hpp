#pragma once

// Run configuration files: a small TOML subset (tables, dotted keys,
// strings, numbers, booleans, arrays) parsed into a JSON tree, plus
// dotted-path overrides from the command line.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "slc/data.hpp"
#include "slc/trainer.hpp"

namespace slc {

nlohmann::json parse_config_text(std::string_view text);
// .json files are read as JSON; a run manifest's "config" member is used
// when present, so a manifest can be fed back to `train`.
nlohmann::json load_config_file(const std::filesystem::path& path);
// `a.b.c=value`; value is parsed like a config value, falling back to a
// bare string.
void apply_override(nlohmann::json& config, std::string_view assignment);

struct RunConfig {
  DatasetSource data;
  std::optional<DatasetSource> test_data;
  double validation_fraction = 0.1;
  std::uint64_t split_seed = 0;
  TrainConfig train;
  std::filesystem::path output_dir;

  // Throws ConfigError with the dotted field name on any invalid entry.
  static RunConfig from_json(const nlohmann::json& config,
                             const std::filesystem::path& default_output_dir);
  nlohmann::json to_json() const;
};

}  // namespace slc
