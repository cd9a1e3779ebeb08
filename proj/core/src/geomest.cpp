#include "regcd/geomest.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

#include "regcd/errors.hpp"
#include "regcd/rng.hpp"

namespace regcd {

namespace {

using json = nlohmann::json;

constexpr double kConditionLimit = 1e10;
constexpr double kCollinearTol = 1e-8;

struct NormalizedPoints {
    std::vector<Point> points;
    Homography transform; // maps raw coordinates to normalized ones
};

// Hartley conditioning: centroid to the origin, mean distance sqrt(2).
NormalizedPoints normalize_points(const std::vector<Point>& pts) {
    double cx = 0.0, cy = 0.0;
    for (const Point& p : pts) {
        cx += p.x;
        cy += p.y;
    }
    cx /= static_cast<double>(pts.size());
    cy /= static_cast<double>(pts.size());

    double mean_dist = 0.0;
    for (const Point& p : pts) mean_dist += std::hypot(p.x - cx, p.y - cy);
    mean_dist /= static_cast<double>(pts.size());
    const double scale = mean_dist > 1e-12 ? std::numbers::sqrt2 / mean_dist : 1.0;

    NormalizedPoints out;
    out.transform = Homography({scale, 0, -scale * cx, 0, scale, -scale * cy, 0, 0, 1});
    out.points.reserve(pts.size());
    for (const Point& p : pts) out.points.push_back({scale * (p.x - cx), scale * (p.y - cy)});
    return out;
}

bool three_collinear(const std::vector<Point>& pts) {
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k) {
                const double cross = (pts[j].x - pts[i].x) * (pts[k].y - pts[i].y) -
                                     (pts[j].y - pts[i].y) * (pts[k].x - pts[i].x);
                // Scale-aware test: compare the parallelogram area against
                // the edge lengths so the tolerance is in normalized units.
                const double len = std::hypot(pts[j].x - pts[i].x, pts[j].y - pts[i].y) *
                                   std::hypot(pts[k].x - pts[i].x, pts[k].y - pts[i].y);
                if (std::abs(cross) <= kCollinearTol * std::max(len, 1.0)) return true;
            }
    return false;
}

double reprojection_error(const Homography& h, const KeypointPair& pair) {
    const auto& m = h.data();
    const double u = m[0] * pair.t2.x + m[1] * pair.t2.y + m[2];
    const double v = m[3] * pair.t2.x + m[4] * pair.t2.y + m[5];
    const double w = m[6] * pair.t2.x + m[7] * pair.t2.y + m[8];
    if (std::abs(w) <= 1e-12) return std::numeric_limits<double>::infinity();
    return std::hypot(u / w - pair.t1.x, v / w - pair.t1.y);
}

int count_inliers(const Homography& h, const KeypointSet& kps, double threshold,
                  std::vector<bool>* mask) {
    int count = 0;
    if (mask) mask->assign(kps.size(), false);
    for (std::size_t i = 0; i < kps.size(); ++i) {
        if (reprojection_error(h, kps.pairs[i]) <= threshold) {
            ++count;
            if (mask) (*mask)[i] = true;
        }
    }
    return count;
}

} // namespace

Homography dlt_homography(const std::vector<Point>& src, const std::vector<Point>& dst) {
    if (src.size() != dst.size())
        throw ContractError("dlt requires equal-length point lists, got " +
                            std::to_string(src.size()) + " and " + std::to_string(dst.size()));
    const std::size_t n = src.size();
    if (n < 4)
        throw EstimationError("dlt requires at least 4 correspondences, got " +
                              std::to_string(n));
    for (const Point& p : src)
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw ContractError("dlt input contains non-finite coordinates");
    for (const Point& p : dst)
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw ContractError("dlt input contains non-finite coordinates");

    const NormalizedPoints ns = normalize_points(src);
    const NormalizedPoints nd = normalize_points(dst);
    if (n == 4 && (three_collinear(ns.points) || three_collinear(nd.points)))
        throw DegeneracyError("3 of 4 minimal-sample points are collinear");

    Eigen::MatrixXd a(static_cast<Eigen::Index>(2 * n), 9);
    for (std::size_t i = 0; i < n; ++i) {
        const Point& s = ns.points[i];
        const Point& d = nd.points[i];
        const Eigen::Index r = static_cast<Eigen::Index>(2 * i);
        a.row(r) << -s.x, -s.y, -1, 0, 0, 0, d.x * s.x, d.x * s.y, d.x;
        a.row(r + 1) << 0, 0, 0, -s.x, -s.y, -1, d.y * s.x, d.y * s.y, d.y;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd& sigma = svd.singularValues();
    // Rank 8 is required for a unique null space; sigma[7] bounds it.
    if (sigma(7) <= 0.0 || sigma(0) / sigma(7) > kConditionLimit)
        throw DegeneracyError("degenerate point configuration (design-matrix condition " +
                              std::to_string(sigma(7) > 0.0 ? sigma(0) / sigma(7) : 0.0) + ")");
    const Eigen::VectorXd h_vec = svd.matrixV().col(8);

    Homography h_norm({h_vec(0), h_vec(1), h_vec(2), h_vec(3), h_vec(4), h_vec(5), h_vec(6),
                       h_vec(7), h_vec(8)});
    try {
        return nd.transform.inverse() * h_norm * ns.transform;
    } catch (const GeometryError& e) {
        throw DegeneracyError(std::string("denormalized homography is singular: ") + e.what());
    }
}

RansacResult ransac_homography(const KeypointSet& kps, const RansacConfig& cfg) {
    const std::size_t n = kps.size();
    if (n < 4)
        throw EstimationError("ransac requires at least 4 keypoint pairs, got " +
                              std::to_string(n));
    if (cfg.inlier_threshold <= 0.0) throw ConfigError("inlier threshold must be positive");
    if (cfg.max_iterations < 1) throw ConfigError("max iteration count must be at least 1");
    if (cfg.confidence <= 0.0 || cfg.confidence >= 1.0)
        throw ConfigError("confidence must lie in (0, 1)");

    int best_count = 0;
    Homography best_h;
    bool have_model = false;
    int iterations = 0;
    double needed = static_cast<double>(cfg.max_iterations);

    for (int t = 0; t < cfg.max_iterations && static_cast<double>(t) < needed; ++t) {
        iterations = t + 1;
        // Substream per trial: the sample sequence never depends on how many
        // trials other threads would have consumed.
        SplitMix64 rng(substream_seed(cfg.seed, static_cast<std::uint64_t>(t)));
        std::size_t idx[4];
        for (int k = 0; k < 4; ++k) {
            bool fresh = false;
            while (!fresh) {
                idx[k] = static_cast<std::size_t>(rng.below(n));
                fresh = true;
                for (int j = 0; j < k; ++j) fresh = fresh && idx[j] != idx[k];
            }
        }

        std::vector<Point> src(4), dst(4);
        for (int k = 0; k < 4; ++k) {
            src[k] = kps.pairs[idx[k]].t2;
            dst[k] = kps.pairs[idx[k]].t1;
        }

        Homography h;
        try {
            h = dlt_homography(src, dst);
        } catch (const DegeneracyError&) {
            continue;
        } catch (const EstimationError&) {
            continue;
        }

        const int count = count_inliers(h, kps, cfg.inlier_threshold, nullptr);
        if (count > best_count) {
            best_count = count;
            best_h = h;
            have_model = true;
            // Standard adaptive stop: enough trials that an all-inlier
            // sample was drawn with probability >= confidence.
            const double w = static_cast<double>(count) / static_cast<double>(n);
            const double p_good = std::pow(w, 4);
            if (p_good >= 1.0) {
                needed = 0.0;
            } else if (p_good > 0.0) {
                needed = std::log1p(-cfg.confidence) / std::log1p(-p_good);
            }
        }
    }

    if (!have_model || best_count < 4)
        throw EstimationError("no consensus: best model has " + std::to_string(best_count) +
                              " inliers (need 4)");

    RansacResult result;
    result.h = best_h;
    result.inlier_count = count_inliers(best_h, kps, cfg.inlier_threshold, &result.inlier_mask);
    result.iterations_run = iterations;

    // Refit on the consensus set; keep it only if it does not lose inliers.
    std::vector<Point> src, dst;
    for (std::size_t i = 0; i < n; ++i) {
        if (!result.inlier_mask[i]) continue;
        src.push_back(kps.pairs[i].t2);
        dst.push_back(kps.pairs[i].t1);
    }
    try {
        const Homography refit = dlt_homography(src, dst);
        std::vector<bool> refit_mask;
        const int refit_count = count_inliers(refit, kps, cfg.inlier_threshold, &refit_mask);
        if (refit_count >= result.inlier_count) {
            result.h = refit;
            result.inlier_count = refit_count;
            result.inlier_mask = std::move(refit_mask);
        }
    } catch (const Error&) {
        // Degenerate refit: the minimal-sample model stands.
    }
    return result;
}

Polygon overlap_polygon(int t1_w, int t1_h, int t2_w, int t2_h, const Homography& h) {
    Polygon warped;
    for (const Point& corner : rect_polygon(t2_w, t2_h).vertices)
        warped.vertices.push_back(apply_h(h, corner));
    // An orientation-reversing h yields a clockwise image; flip to CCW.
    if (warped.area() < 0.0)
        std::reverse(warped.vertices.begin(), warped.vertices.end());
    return clip_convex(warped, rect_polygon(t1_w, t1_h));
}

Raster polygon_mask(const Polygon& poly, int width, int height) {
    Raster mask(width, height, 1);
    if (poly.empty()) return mask;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (poly.contains({x + 0.5, y + 0.5})) mask.at(x, y) = 255;
    return mask;
}

std::string homography_to_json(const Homography& h) {
    json rows = json::array();
    for (int r = 0; r < 3; ++r) rows.push_back({h.at(r, 0), h.at(r, 1), h.at(r, 2)});
    return json{{"h", rows}}.dump(2) + "\n";
}

Homography homography_from_json(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw DecodeError(std::string("homography JSON parse failed: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("h") || !doc["h"].is_array() || doc["h"].size() != 3)
        throw DecodeError("homography JSON must be an object with a 3x3 'h' array");
    std::array<double, 9> m{};
    for (int r = 0; r < 3; ++r) {
        const json& row = doc["h"][r];
        if (!row.is_array() || row.size() != 3)
            throw DecodeError("homography JSON must be an object with a 3x3 'h' array");
        for (int c = 0; c < 3; ++c) {
            try {
                m[r * 3 + c] = row[c].get<double>();
            } catch (const json::exception& e) {
                throw DecodeError(std::string("homography JSON entry malformed: ") + e.what());
            }
        }
    }
    try {
        return Homography(m);
    } catch (const GeometryError& e) {
        throw DecodeError(std::string("homography JSON holds an invalid matrix: ") + e.what());
    }
}

void save_homography_json(const Homography& h, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DecodeError(path + ": cannot open file for writing");
    out << homography_to_json(h);
    if (!out) throw DecodeError(path + ": write failed");
}

Homography load_homography_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DecodeError(path + ": cannot open file");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return homography_from_json(text);
}

std::string polygon_to_json(const Polygon& poly) {
    json verts = json::array();
    for (const Point& p : poly.vertices) verts.push_back({p.x, p.y});
    return json{{"vertices", verts}}.dump(2) + "\n";
}

Polygon polygon_from_json(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw DecodeError(std::string("polygon JSON parse failed: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("vertices") || !doc["vertices"].is_array())
        throw DecodeError("polygon JSON must be an object with a 'vertices' array");
    Polygon out;
    for (const json& v : doc["vertices"]) {
        if (!v.is_array() || v.size() != 2)
            throw DecodeError("polygon JSON vertices must be [x, y] pairs");
        try {
            out.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
        } catch (const json::exception& e) {
            throw DecodeError(std::string("polygon JSON entry malformed: ") + e.what());
        }
    }
    return out;
}

void save_polygon_json(const Polygon& poly, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DecodeError(path + ": cannot open file for writing");
    out << polygon_to_json(poly);
    if (!out) throw DecodeError(path + ": write failed");
}

} // namespace regcd
