#include "config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "regcd/errors.hpp"

namespace regcd::cli {

namespace {

using json = nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (!known.count(key))
            throw ConfigError("unknown config key '" + key + "' in " + where);
}

} // namespace

void validate_config(const PipelineConfig& cfg) {
    if (cfg.tile_size < 32)
        throw ConfigError("tile_size must be at least 32, got " + std::to_string(cfg.tile_size));
    if (cfg.threshold <= 0.0 || cfg.threshold >= 1.0)
        throw ConfigError("threshold must lie in (0, 1), got " + std::to_string(cfg.threshold));
    if (cfg.omega <= 0.0)
        throw ConfigError("omega must be positive, got " + std::to_string(cfg.omega));
    if (cfg.workers < 1)
        throw ConfigError("workers must be at least 1, got " + std::to_string(cfg.workers));
    if (cfg.matcher.empty()) throw ConfigError("matcher must be 'builtin' or a program path");
    if (cfg.segmenter.empty()) throw ConfigError("segmenter must be 'builtin' or a program path");
    if (cfg.ransac.inlier_threshold <= 0.0)
        throw ConfigError("ransac.inlier_threshold must be positive");
    if (cfg.ransac.max_iterations < 1)
        throw ConfigError("ransac.max_iterations must be at least 1");
    if (cfg.ransac.confidence <= 0.0 || cfg.ransac.confidence >= 1.0)
        throw ConfigError("ransac.confidence must lie in (0, 1)");
}

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open config file");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": config is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw ConfigError(path + ": config must be a JSON object");

    PipelineConfig cfg;
    try {
        reject_unknown_keys(doc,
                            {"tile_size", "threshold", "omega", "matcher", "segmenter", "seed",
                             "workers", "ransac"},
                            path);
        cfg.tile_size = doc.value("tile_size", cfg.tile_size);
        cfg.threshold = doc.value("threshold", cfg.threshold);
        cfg.omega = doc.value("omega", cfg.omega);
        cfg.matcher = doc.value("matcher", cfg.matcher);
        cfg.segmenter = doc.value("segmenter", cfg.segmenter);
        cfg.seed = doc.value("seed", cfg.seed);
        cfg.workers = doc.value("workers", cfg.workers);
        if (doc.contains("ransac")) {
            const json& r = doc["ransac"];
            if (!r.is_object()) throw ConfigError(path + ": 'ransac' must be an object");
            reject_unknown_keys(r, {"inlier_threshold", "max_iterations", "confidence"},
                                path + " (ransac)");
            cfg.ransac.inlier_threshold = r.value("inlier_threshold", cfg.ransac.inlier_threshold);
            cfg.ransac.max_iterations = r.value("max_iterations", cfg.ransac.max_iterations);
            cfg.ransac.confidence = r.value("confidence", cfg.ransac.confidence);
        }
    } catch (const json::exception& e) {
        throw ConfigError(path + ": config value has the wrong type: " + e.what());
    }
    validate_config(cfg);
    return cfg;
}

std::string pipeline_config_to_json(const PipelineConfig& cfg) {
    const json doc = {
        {"tile_size", cfg.tile_size},
        {"threshold", cfg.threshold},
        {"omega", cfg.omega},
        {"matcher", cfg.matcher},
        {"segmenter", cfg.segmenter},
        {"seed", cfg.seed},
        {"workers", cfg.workers},
        {"ransac",
         {{"inlier_threshold", cfg.ransac.inlier_threshold},
          {"max_iterations", cfg.ransac.max_iterations},
          {"confidence", cfg.ransac.confidence}}},
    };
    return doc.dump(2) + "\n";
}

} // namespace regcd::cli
