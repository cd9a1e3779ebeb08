#include "regcd/evalbench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "regcd/errors.hpp"
#include "regcd/geomest.hpp"
#include "regcd/image_io.hpp"
#include "regcd/rng.hpp"

namespace regcd {

namespace {

using json = nlohmann::json;

struct LevelBounds {
    double rotation;
    double shift;
};

LevelBounds level_bounds(int level) {
    switch (level) {
        case 1: return {10.0, 0.07};
        case 2: return {20.0, 0.13};
        case 3: return {30.0, 0.20};
        default:
            throw ConfigError("distortion level must be 1, 2 or 3, got " +
                              std::to_string(level));
    }
}

double ratio_or_zero(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

ConfusionCounts confusion(const Raster& pred, const Raster& gt, const Raster* eval_mask) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw ContractError("prediction and ground truth dimensions disagree: " +
                            std::to_string(pred.width) + "x" + std::to_string(pred.height) +
                            " vs " + std::to_string(gt.width) + "x" + std::to_string(gt.height));
    if (eval_mask && (eval_mask->width != gt.width || eval_mask->height != gt.height))
        throw ContractError("evaluation mask dimensions do not match the images");

    ConfusionCounts c;
    const std::size_t n = static_cast<std::size_t>(gt.width) * gt.height;
    for (std::size_t i = 0; i < n; ++i) {
        if (eval_mask && eval_mask->data[i] == 0) continue;
        const bool p = pred.data[i] != 0;
        const bool g = gt.data[i] != 0;
        if (p && g)
            ++c.tp;
        else if (p && !g)
            ++c.fp;
        else if (!p && g)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

Metrics metrics(const ConfusionCounts& c) {
    Metrics m;
    m.precision = ratio_or_zero(c.tp, c.tp + c.fp);
    m.recall = ratio_or_zero(c.tp, c.tp + c.fn);
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    m.iou = ratio_or_zero(c.tp, c.tp + c.fn + c.fp);
    m.oa = ratio_or_zero(c.tp + c.tn, c.total());
    return m;
}

DistortionSpec draw_distortion(int level, std::uint64_t seed) {
    const LevelBounds bounds = level_bounds(level);
    SplitMix64 rng(seed);
    DistortionSpec spec;
    spec.level = level;
    spec.seed = seed;
    spec.rotation_deg = rng.uniform(-bounds.rotation, bounds.rotation);
    spec.shift_frac_x = rng.uniform(-bounds.shift, bounds.shift);
    spec.shift_frac_y = rng.uniform(-bounds.shift, bounds.shift);
    return spec;
}

BenchScenario generate_scenario(const Raster& t1, const Raster& t2_aligned,
                                const Raster& gt_change, const DistortionSpec& spec) {
    if (!t1.same_shape(t2_aligned))
        throw ContractError("t1 and aligned t2 must share dimensions and channels");
    if (gt_change.width != t1.width || gt_change.height != t1.height)
        throw ContractError("ground-truth change mask dimensions do not match t1");
    const LevelBounds bounds = level_bounds(spec.level);
    if (std::abs(spec.rotation_deg) > bounds.rotation)
        throw ContractError("rotation " + std::to_string(spec.rotation_deg) +
                            " exceeds level " + std::to_string(spec.level) + " bound " +
                            std::to_string(bounds.rotation));
    if (std::abs(spec.shift_frac_x) > bounds.shift || std::abs(spec.shift_frac_y) > bounds.shift)
        throw ContractError("shift fraction exceeds level " + std::to_string(spec.level) +
                            " bound " + std::to_string(bounds.shift));

    const double cx = (t1.width - 1) / 2.0;
    const double cy = (t1.height - 1) / 2.0;
    const Homography rotate = Homography::rotation_deg(spec.rotation_deg, cx, cy);
    const Homography shift = Homography::translation(spec.shift_frac_x * t1.width,
                                                     spec.shift_frac_y * t1.height);

    BenchScenario scenario;
    scenario.t1 = t1;
    scenario.gt_change = gt_change;
    scenario.spec = spec;
    // Rotate about the center, then shift: distorted coordinates map to the
    // aligned frame, so registration must recover exactly this matrix.
    scenario.gt_homography = shift * rotate;
    scenario.t2_distorted =
        warp_raster(t2_aligned, scenario.gt_homography.inverse(), t1.width, t1.height).image;
    return scenario;
}

std::pair<double, double> registration_error(const Homography& estimated, const Homography& gt,
                                             int width, int height) {
    constexpr int kGrid = 20;
    double total = 0.0, worst = 0.0;
    for (int j = 0; j < kGrid; ++j) {
        for (int i = 0; i < kGrid; ++i) {
            const Point p{i * (width - 1.0) / (kGrid - 1), j * (height - 1.0) / (kGrid - 1)};
            const Point a = apply_h(estimated, p);
            const Point b = apply_h(gt, p);
            const double err = std::hypot(a.x - b.x, a.y - b.y);
            total += err;
            worst = std::max(worst, err);
        }
    }
    return {total / (kGrid * kGrid), worst};
}

void save_scenario_bundle(const BenchScenario& scenario, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path base(dir);
    save_png(scenario.t1, (base / "t1.png").string());
    save_png(scenario.t2_distorted, (base / "t2_distorted.png").string());
    save_png(scenario.gt_change, (base / "gt_change.png").string());
    save_homography_json(scenario.gt_homography, (base / "gt_h.json").string());

    const json spec_doc = {
        {"level", scenario.spec.level},
        {"rotation_deg", scenario.spec.rotation_deg},
        {"shift_frac", {scenario.spec.shift_frac_x, scenario.spec.shift_frac_y}},
        {"seed", scenario.spec.seed},
        {"order", "rotate-then-shift"},
    };
    std::ofstream out(base / "spec.json", std::ios::binary);
    if (!out) throw DecodeError((base / "spec.json").string() + ": cannot open for writing");
    out << spec_doc.dump(2) << "\n";
}

BenchScenario load_scenario_bundle(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path base(dir);
    BenchScenario scenario;
    scenario.t1 = load_raster((base / "t1.png").string());
    scenario.t2_distorted = load_raster((base / "t2_distorted.png").string());
    scenario.gt_change = load_raster((base / "gt_change.png").string());
    scenario.gt_homography = load_homography_json((base / "gt_h.json").string());

    std::ifstream in(base / "spec.json", std::ios::binary);
    if (!in) throw DecodeError((base / "spec.json").string() + ": cannot open file");
    json doc;
    try {
        doc = json::parse(in);
        scenario.spec.level = doc.at("level").get<int>();
        scenario.spec.rotation_deg = doc.at("rotation_deg").get<double>();
        scenario.spec.shift_frac_x = doc.at("shift_frac").at(0).get<double>();
        scenario.spec.shift_frac_y = doc.at("shift_frac").at(1).get<double>();
        scenario.spec.seed = doc.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw DecodeError((base / "spec.json").string() + ": malformed: " + e.what());
    }
    return scenario;
}

std::string metrics_to_json(const Metrics& m, const ConfusionCounts& c) {
    const json doc = {
        {"precision", m.precision},
        {"recall", m.recall},
        {"f1", m.f1},
        {"iou", m.iou},
        {"oa", m.oa},
        {"confusion", {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}}},
    };
    return doc.dump(2) + "\n";
}

} // namespace regcd
