#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "regcd/geometry.hpp"
#include "regcd/matchkit.hpp"
#include "regcd/raster.hpp"

namespace regcd {

struct RansacConfig {
    double inlier_threshold = 3.0; // reprojection error in pixels
    int max_iterations = 5000;
    double confidence = 0.999;
    std::uint64_t seed = 0;
};

/// Least-squares homography mapping src points onto dst points under Hartley
/// normalization (translate to centroid, scale to mean distance sqrt(2)).
/// Exact for >= 4 consistent points. Fewer than 4 correspondences throw
/// EstimationError; rank-deficient configurations throw DegeneracyError.
Homography dlt_homography(const std::vector<Point>& src, const std::vector<Point>& dst);

struct RansacResult {
    Homography h;
    std::vector<bool> inlier_mask; // one flag per input pair
    int inlier_count = 0;
    int iterations_run = 0;
};

/// RANSAC over KeypointSet pairs; the model maps T2 coordinates onto T1:
/// pair i is an inlier iff |apply_h(H, t2_i) - t1_i| <= inlier_threshold.
/// Trials use counter-based seed substreams, so results are deterministic
/// for a given (kps, cfg) even if trials are evaluated concurrently. The
/// winning model is refit on its inliers; the refit is kept only if it does
/// not lose inliers. Fewer than 4 pairs or no 4-inlier consensus throw
/// EstimationError.
RansacResult ransac_homography(const KeypointSet& kps, const RansacConfig& cfg);

/// Intersection of T1's rectangle [0,w1]x[0,h1] with the h-image of T2's
/// rectangle, in T1 coordinates. Both footprints are convex, so the clip is
/// exact. May be empty.
Polygon overlap_polygon(int t1_w, int t1_h, int t2_w, int t2_h, const Homography& h);

/// Rasterize: pixel = 255 iff its center (x+0.5, y+0.5) is inside or on poly.
Raster polygon_mask(const Polygon& poly, int width, int height);

/// {"h": [[...],[...],[...]]} row-major with m[2][2] == 1.
std::string homography_to_json(const Homography& h);
Homography homography_from_json(const std::string& json_text);
void save_homography_json(const Homography& h, const std::string& path);
Homography load_homography_json(const std::string& path);

/// {"vertices": [[x,y],...]}, counter-clockwise.
std::string polygon_to_json(const Polygon& poly);
Polygon polygon_from_json(const std::string& json_text);
void save_polygon_json(const Polygon& poly, const std::string& path);

} // namespace regcd
