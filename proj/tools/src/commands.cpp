#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <vector>

#include <nlohmann/json.hpp>

#include "regcd/changekit.hpp"
#include "regcd/errors.hpp"
#include "regcd/evalbench.hpp"
#include "regcd/featpyr.hpp"
#include "regcd/geomest.hpp"
#include "regcd/image_io.hpp"
#include "regcd/matchkit.hpp"
#include "regcd/pretrainkit.hpp"
#include "regcd/raster.hpp"

namespace regcd::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Collects artifact writes for one command; anything already written is
/// removed again if the command fails before commit().
class ArtifactSink {
public:
    explicit ArtifactSink(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

    ~ArtifactSink() {
        if (committed_) return;
        for (const fs::path& p : written_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }

    fs::path path(const std::string& name) const { return dir_ / name; }

    void write_text(const std::string& name, const std::string& content) {
        const fs::path p = path(name);
        std::ofstream out(p, std::ios::binary);
        if (!out) throw DecodeError(p.string() + ": cannot open file for writing");
        out << content;
        if (!out) throw DecodeError(p.string() + ": write failed");
        written_.push_back(p);
    }

    void write_png(const std::string& name, const Raster& img) {
        const fs::path p = path(name);
        save_png(img, p.string());
        written_.push_back(p);
    }

    void commit() { committed_ = true; }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
    bool committed_ = false;
};

Raster probs_to_png(const FloatImage& probs) {
    Raster out(probs.width, probs.height, 1);
    for (std::size_t i = 0; i < probs.data.size(); ++i)
        out.data[i] = static_cast<std::uint8_t>(
            std::lround(std::clamp(static_cast<double>(probs.data[i]), 0.0, 1.0) * 255.0));
    return out;
}

std::unique_ptr<MatcherPlugin> make_matcher(const PipelineConfig& cfg) {
    if (cfg.matcher == "builtin") return std::make_unique<BuiltinMatcher>();
    return std::make_unique<SubprocessMatcher>(cfg.matcher);
}

std::unique_ptr<SegmenterPlugin> make_segmenter(const PipelineConfig& cfg) {
    if (cfg.segmenter == "builtin") return std::make_unique<BuiltinSegmenter>();
    return std::make_unique<SubprocessSegmenter>(cfg.segmenter);
}

} // namespace

PipelineConfig resolve_config(const CommonArgs& args) {
    PipelineConfig cfg;
    if (args.config_path) cfg = load_pipeline_config(*args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (args.workers) cfg.workers = *args.workers;
    validate_config(cfg);
    cfg.ransac.seed = cfg.seed;
    return cfg;
}

void cmd_warpgen(const std::string& t1_path, const std::string& t2_path,
                 const std::string& gt_path, int level, std::uint64_t seed,
                 const std::string& out_dir) {
    const Raster t1 = load_raster(t1_path);
    const Raster t2_aligned = load_raster(t2_path);
    const Raster gt_change = load_raster(gt_path);

    const DistortionSpec spec = draw_distortion(level, seed);
    const BenchScenario scenario = generate_scenario(t1, t2_aligned, gt_change, spec);
    save_scenario_bundle(scenario, out_dir);
}

void cmd_register(const std::string& t1_path, const std::string& t2_path,
                  const PipelineConfig& cfg, const std::string& out_dir) {
    const Raster t1 = load_raster(t1_path);
    const Raster t2 = load_raster(t2_path);

    const std::unique_ptr<MatcherPlugin> matcher = make_matcher(cfg);
    const FilterBank bank = default_filter_bank();
    const HierarchicalMatch match = hierarchical_match(t1, t2, *matcher, bank);

    if (match.merged.size() < 4)
        throw EstimationError("only " + std::to_string(match.merged.size()) +
                              " keypoint pairs found (need at least 4)");
    const RansacResult ransac = ransac_homography(match.merged, cfg.ransac);

    const WarpResult warped = warp_raster(t2, ransac.h, t1.width, t1.height);
    const Polygon overlap =
        overlap_polygon(t1.width, t1.height, t2.width, t2.height, ransac.h);

    const json report = {
        {"keypoints",
         {{"original", match.count_original},
          {"scale2", match.count_scale2},
          {"scale4", match.count_scale4},
          {"merged", match.merged.size()}}},
        {"ransac",
         {{"inliers", ransac.inlier_count},
          {"iterations", ransac.iterations_run},
          {"inlier_ratio",
           static_cast<double>(ransac.inlier_count) / static_cast<double>(match.merged.size())}}},
        {"overlap_area", overlap.area()},
    };

    ArtifactSink sink(out_dir);
    sink.write_text("resolved_config.json", pipeline_config_to_json(cfg));
    sink.write_text("keypoints.json", keypoints_to_json(match.merged));
    sink.write_text("h.json", homography_to_json(ransac.h));
    sink.write_png("t2_registered.png", warped.image);
    sink.write_png("validity.png", warped.validity);
    sink.write_text("overlap.json", polygon_to_json(overlap));
    sink.write_text("report.json", report.dump(2) + "\n");
    sink.commit();
}

void cmd_detect(const std::string& t1_path, const std::string& t2_registered_path,
                const std::string& validity_path, const PipelineConfig& cfg,
                const std::string& out_dir) {
    const Raster t1 = load_raster(t1_path);
    const Raster t2_registered = load_raster(t2_registered_path);
    const Raster validity = load_raster(validity_path);

    bool any_valid = false;
    for (std::uint8_t v : validity.data) any_valid = any_valid || v != 0;
    if (!any_valid)
        std::cerr << "warning: validity mask is empty; change map will be all zero\n";

    const std::unique_ptr<SegmenterPlugin> segmenter = make_segmenter(cfg);
    const BaselineClassifier classifier;
    const ChangeMap map = detect_changes(t1, t2_registered, validity, classifier, *segmenter,
                                         cfg.tile_size, cfg.threshold, cfg.workers);

    ArtifactSink sink(out_dir);
    sink.write_text("resolved_config.json", pipeline_config_to_json(cfg));
    sink.write_png("change_map.png", map.binary);
    sink.write_png("probs.png", probs_to_png(map.probs));
    sink.commit();
}

void cmd_pipeline(const std::string& t1_path, const std::string& t2_path,
                  const std::optional<std::string>& gt_change_path, const PipelineConfig& cfg,
                  const std::string& out_dir) {
    cmd_register(t1_path, t2_path, cfg, out_dir);

    const fs::path base(out_dir);
    // Detection consumes the registration artifacts from disk, so running
    // register followed by detect by hand yields byte-identical outputs.
    cmd_detect(t1_path, (base / "t2_registered.png").string(),
               (base / "validity.png").string(), cfg, out_dir);

    const Raster t1 = load_raster(t1_path);
    const Polygon overlap = [&] {
        std::ifstream in(base / "overlap.json", std::ios::binary);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return polygon_from_json(text);
    }();
    const Raster mask_ob = polygon_mask(overlap, t1.width, t1.height);

    ChangeMap initial;
    initial.binary = load_raster((base / "change_map.png").string());
    const Raster probs_png = load_raster((base / "probs.png").string());
    initial.probs = FloatImage(probs_png.width, probs_png.height);
    for (std::size_t i = 0; i < probs_png.data.size(); ++i)
        initial.probs.data[i] = static_cast<float>(probs_png.data[i] / 255.0);
    const ChangeMap final_map = apply_overlap_mask(initial, mask_ob);

    ArtifactSink sink(out_dir);
    sink.write_png("overlap_mask.png", mask_ob);
    sink.write_png("change_map_final.png", final_map.binary);
    sink.write_png("probs_final.png", probs_to_png(final_map.probs));
    if (gt_change_path) {
        const Raster gt_change = load_raster(*gt_change_path);
        // Cropping to the overlap changes the evaluated population, so the
        // ground truth is compared inside the overlap region only.
        const ConfusionCounts counts = confusion(final_map.binary, gt_change, &mask_ob);
        sink.write_text("metrics.json", metrics_to_json(metrics(counts), counts));
    }
    sink.commit();
}

void cmd_eval(const std::string& pred_path, const std::string& gt_path,
              const std::optional<std::string>& mask_path, const std::string& out_dir) {
    const Raster pred = load_raster(pred_path);
    const Raster gt = load_raster(gt_path);
    std::optional<Raster> mask;
    if (mask_path) mask = load_raster(*mask_path);

    const ConfusionCounts counts = confusion(pred, gt, mask ? &*mask : nullptr);
    ArtifactSink sink(out_dir);
    sink.write_text("metrics.json", metrics_to_json(metrics(counts), counts));
    sink.commit();
}

} // namespace regcd::cli
