#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "regcd/geometry.hpp"
#include "regcd/raster.hpp"

namespace regcd {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
};

/// Pixel confusion over pred vs gt (positive = nonzero), restricted to
/// eval_mask == on pixels when a mask is given. Dimension mismatch throws
/// ContractError.
ConfusionCounts confusion(const Raster& pred, const Raster& gt,
                          const Raster* eval_mask = nullptr);

struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double iou = 0.0;
    double oa = 0.0;
};

/// precision, recall, F1, IoU and overall accuracy; every 0/0 ratio is 0.
Metrics metrics(const ConfusionCounts& c);

/// Bounded random distortion: rotation and fractional shift drawn uniformly
/// within the difficulty level's envelope.
///   Lv.1: |rot| <= 10 deg, |shift| <= 0.07
///   Lv.2: |rot| <= 20 deg, |shift| <= 0.13
///   Lv.3: |rot| <= 30 deg, |shift| <= 0.20
struct DistortionSpec {
    int level = 1;
    double rotation_deg = 0.0;
    double shift_frac_x = 0.0;
    double shift_frac_y = 0.0;
    std::uint64_t seed = 0;
};

/// Draw a spec uniformly within the level bounds; deterministic per seed.
/// level outside {1,2,3} throws ConfigError.
DistortionSpec draw_distortion(int level, std::uint64_t seed);

struct BenchScenario {
    Raster t1;
    Raster t2_distorted;
    Homography gt_homography; // maps distorted-T2 coordinates to T1
    Raster gt_change;         // 0/255, T1 frame
    DistortionSpec spec;
};

/// Apply the spec's distortion to the aligned T2: the ground-truth map is
/// shift composed after rotation about the image center (rotate-then-shift),
/// and t2_distorted = warp of t2_aligned by gt_homography^-1. Dimension
/// mismatches or a spec outside its level bounds throw ContractError.
BenchScenario generate_scenario(const Raster& t1, const Raster& t2_aligned,
                                const Raster& gt_change, const DistortionSpec& spec);

/// Mean and max disagreement of two homographies over a 20x20 grid spanning
/// [0, width-1] x [0, height-1].
std::pair<double, double> registration_error(const Homography& estimated,
                                             const Homography& gt,
                                             int width, int height);

/// Write/read a scenario bundle directory: t1.png, t2_distorted.png,
/// gt_change.png, gt_h.json, spec.json.
void save_scenario_bundle(const BenchScenario& scenario, const std::string& dir);
BenchScenario load_scenario_bundle(const std::string& dir);

std::string metrics_to_json(const Metrics& m, const ConfusionCounts& c);

} // namespace regcd
