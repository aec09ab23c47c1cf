#pragma once

#include <filesystem>
#include <string>

#include "patchtrack/tracker.hpp"

namespace patchtrack {

/// Applies a flat JSON object over `cfg` field by field. Unknown keys and
/// mistyped values throw ConfigError and leave `cfg` unchanged.
void apply_config_json(const std::string& text, TrackerConfig& cfg);
TrackerConfig load_config(const std::filesystem::path& path, TrackerConfig base = {});

std::string config_to_json(const TrackerConfig& cfg);

}  // namespace patchtrack
