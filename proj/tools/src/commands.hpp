#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "config.hpp"

namespace regcd::cli {

struct CommonArgs {
    std::optional<std::string> config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;    // overrides config.seed
    std::optional<int> workers;           // overrides config.workers
};

/// Config file merged with flag overrides; flags win.
PipelineConfig resolve_config(const CommonArgs& args);

void cmd_warpgen(const std::string& t1, const std::string& t2_aligned,
                 const std::string& gt_change, int level, std::uint64_t seed,
                 const std::string& out_dir);

void cmd_register(const std::string& t1, const std::string& t2, const PipelineConfig& cfg,
                  const std::string& out_dir);

void cmd_detect(const std::string& t1, const std::string& t2_registered,
                const std::string& validity, const PipelineConfig& cfg,
                const std::string& out_dir);

void cmd_pipeline(const std::string& t1, const std::string& t2,
                  const std::optional<std::string>& gt_change, const PipelineConfig& cfg,
                  const std::string& out_dir);

void cmd_eval(const std::string& pred, const std::string& gt,
              const std::optional<std::string>& mask, const std::string& out_dir);

} // namespace regcd::cli
