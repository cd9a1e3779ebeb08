#pragma once

#include <cstdint>
#include <string>

#include "regcd/geomest.hpp"

namespace regcd::cli {

/// Batch-run configuration. Defaults are complete, so an empty config file
/// (or none at all) is valid; every run writes the resolved values beside
/// its outputs.
struct PipelineConfig {
    int tile_size = 256;
    double threshold = 0.5;
    double omega = 2.0;
    std::string matcher = "builtin";   // "builtin" or a plugin program path
    std::string segmenter = "builtin"; // "builtin" or a plugin program path
    std::uint64_t seed = 0;
    int workers = 1;
    RansacConfig ransac;
};

/// Parse a config JSON file. Unknown keys, malformed JSON and out-of-range
/// values all raise ConfigError (usage errors, exit code 2).
PipelineConfig load_pipeline_config(const std::string& path);

/// Range validation shared by file loading and flag overrides.
void validate_config(const PipelineConfig& cfg);

std::string pipeline_config_to_json(const PipelineConfig& cfg);

} // namespace regcd::cli
