#include "regcd/matchkit.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>

#include <nlohmann/json.hpp>

#include "regcd/errors.hpp"
#include "regcd/image_io.hpp"
#include "regcd/process.hpp"

namespace regcd {

namespace {

using json = nlohmann::json;

constexpr int kPatchRadius = 5;      // 11x11 descriptor patch
constexpr int kDescriptorDim = (2 * kPatchRadius + 1) * (2 * kPatchRadius + 1);
constexpr double kNmsRadiusSq = 16.0; // suppression radius 4 px
constexpr double kQualityLevel = 0.01;
constexpr double kRatioThreshold = 0.9;

FloatImage gray_float(const Raster& img) {
    const Raster gray = to_gray(img);
    FloatImage out(gray.width, gray.height);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = static_cast<float>(gray.data[i]);
    return out;
}

float sample_bilinear(const FloatImage& img, double x, double y) {
    x = std::clamp(x, 0.0, img.width - 1.0);
    y = std::clamp(y, 0.0, img.height - 1.0);
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - x0, fy = y - y0;
    const double top = img.at(x0, y0) * (1.0 - fx) + img.at(x1, y0) * fx;
    const double bot = img.at(x0, y1) * (1.0 - fx) + img.at(x1, y1) * fx;
    return static_cast<float>(top * (1.0 - fy) + bot * fy);
}

double grad_x(const FloatImage& img, int x, int y) {
    const int xm = std::max(x - 1, 0), xp = std::min(x + 1, img.width - 1);
    return 0.5 * (img.at(xp, y) - img.at(xm, y));
}

double grad_y(const FloatImage& img, int x, int y) {
    const int ym = std::max(y - 1, 0), yp = std::min(y + 1, img.height - 1);
    return 0.5 * (img.at(x, yp) - img.at(x, ym));
}

/// Dominant gradient direction near (cx, cy): 36-bin magnitude-weighted
/// orientation histogram over a Gaussian-weighted disc, peak refined by
/// parabolic interpolation. Gives the descriptor a repeatable frame under
/// moderate rotation.
double corner_orientation(const FloatImage& img, int cx, int cy) {
    constexpr int kBins = 36;
    constexpr int kRadius = 6;
    constexpr double kSigma = 3.0;
    double hist[kBins] = {};
    for (int dy = -kRadius; dy <= kRadius; ++dy) {
        for (int dx = -kRadius; dx <= kRadius; ++dx) {
            if (dx * dx + dy * dy > kRadius * kRadius) continue;
            const int x = std::clamp(cx + dx, 0, img.width - 1);
            const int y = std::clamp(cy + dy, 0, img.height - 1);
            const double gx = grad_x(img, x, y);
            const double gy = grad_y(img, x, y);
            const double mag = std::sqrt(gx * gx + gy * gy);
            if (mag <= 0.0) continue;
            const double weight = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
            double angle = std::atan2(gy, gx); // [-pi, pi]
            if (angle < 0.0) angle += 2.0 * std::numbers::pi;
            int bin = static_cast<int>(angle / (2.0 * std::numbers::pi) * kBins);
            if (bin >= kBins) bin = 0;
            hist[bin] += mag * weight;
        }
    }
    int best = 0;
    for (int i = 1; i < kBins; ++i)
        if (hist[i] > hist[best]) best = i;
    if (hist[best] <= 0.0) return 0.0;
    const double prev = hist[(best + kBins - 1) % kBins];
    const double next = hist[(best + 1) % kBins];
    const double denom = prev - 2.0 * hist[best] + next;
    double offset = 0.0;
    if (std::abs(denom) > 1e-12) offset = std::clamp(0.5 * (prev - next) / denom, -0.5, 0.5);
    return (best + 0.5 + offset) * (2.0 * std::numbers::pi / kBins);
}

/// 11x11 patch sampled on a grid rotated to the corner's orientation,
/// then normalized to zero mean / unit variance.
std::vector<float> describe(const FloatImage& img, const Corner& c) {
    const double theta = corner_orientation(img, static_cast<int>(c.x), static_cast<int>(c.y));
    const double cs = std::cos(theta), sn = std::sin(theta);
    std::vector<float> desc(kDescriptorDim);
    int i = 0;
    for (int v = -kPatchRadius; v <= kPatchRadius; ++v)
        for (int u = -kPatchRadius; u <= kPatchRadius; ++u)
            desc[i++] = sample_bilinear(img, c.x + cs * u - sn * v, c.y + sn * u + cs * v);

    double mean = 0.0;
    for (float d : desc) mean += d;
    mean /= kDescriptorDim;
    double var = 0.0;
    for (float d : desc) var += (d - mean) * (d - mean);
    var /= kDescriptorDim;
    const double std_dev = std::sqrt(var);
    if (std_dev < 1e-6) {
        std::fill(desc.begin(), desc.end(), 0.0f);
    } else {
        for (float& d : desc) d = static_cast<float>((d - mean) / std_dev);
    }
    return desc;
}

struct MatchHalf {
    std::vector<int> best_index;   // nearest neighbor in the other set, -1 if none
    std::vector<double> ratio;     // best/second SSD, 1 when undecidable
};

MatchHalf nearest_neighbors(const std::vector<std::vector<float>>& from,
                            const std::vector<std::vector<float>>& to) {
    MatchHalf out;
    out.best_index.assign(from.size(), -1);
    out.ratio.assign(from.size(), 1.0);
    for (std::size_t i = 0; i < from.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        double second = std::numeric_limits<double>::infinity();
        int best_j = -1;
        for (std::size_t j = 0; j < to.size(); ++j) {
            double ssd = 0.0;
            const float* a = from[i].data();
            const float* b = to[j].data();
            for (int k = 0; k < kDescriptorDim; ++k) {
                const double d = static_cast<double>(a[k]) - b[k];
                ssd += d * d;
            }
            if (ssd < best) {
                second = best;
                best = ssd;
                best_j = static_cast<int>(j);
            } else if (ssd < second) {
                second = ssd;
            }
        }
        out.best_index[i] = best_j;
        if (best_j < 0) continue;
        if (std::isinf(second))
            out.ratio[i] = 0.0; // only one candidate: unambiguous
        else if (second <= 0.0)
            out.ratio[i] = 1.0; // duplicate descriptors: ambiguous
        else
            out.ratio[i] = best / second;
    }
    return out;
}

} // namespace

std::vector<Corner> detect_corners(const Raster& img, int max_points) {
    if (max_points <= 0) return {};
    const FloatImage gray = gray_float(img);
    const int w = gray.width, h = gray.height;
    if (w < 3 || h < 3) return {};

    FloatImage ix(w, h), iy(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            ix.at(x, y) = static_cast<float>(grad_x(gray, x, y));
            iy.at(x, y) = static_cast<float>(grad_y(gray, x, y));
        }

    // Minimum structure-tensor eigenvalue over a 3x3 window.
    FloatImage response(w, h);
    float max_resp = 0.0f;
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            double a = 0.0, b = 0.0, c = 0.0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const double gx = ix.at(x + dx, y + dy);
                    const double gy = iy.at(x + dx, y + dy);
                    a += gx * gx;
                    b += gx * gy;
                    c += gy * gy;
                }
            const double half_trace = 0.5 * (a + c);
            const double root = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
            const float resp = static_cast<float>(half_trace - root);
            response.at(x, y) = resp;
            max_resp = std::max(max_resp, resp);
        }
    }
    if (max_resp <= 0.0f) return {};
    const float threshold = static_cast<float>(kQualityLevel) * max_resp;

    // 3x3 local maxima; within a plateau only the first pixel in scan order
    // qualifies, so candidate selection is deterministic.
    std::vector<Corner> candidates;
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const float r = response.at(x, y);
            if (r < threshold) continue;
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy)
                for (int dx = -1; dx <= 1 && is_max; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const float n = response.at(x + dx, y + dy);
                    const bool earlier = dy < 0 || (dy == 0 && dx < 0);
                    if (earlier ? (r <= n) : (r < n)) is_max = false;
                }
            if (is_max)
                candidates.push_back({static_cast<double>(x), static_cast<double>(y), r});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Corner& l, const Corner& r) {
        if (l.strength != r.strength) return l.strength > r.strength;
        if (l.y != r.y) return l.y < r.y;
        return l.x < r.x;
    });

    // Greedy radius suppression, strongest first, bucket grid for the lookup.
    const int cell = 4;
    const int grid_w = w / cell + 1, grid_h = h / cell + 1;
    std::vector<std::vector<int>> grid(static_cast<std::size_t>(grid_w) * grid_h);
    std::vector<Corner> kept;
    for (const Corner& c : candidates) {
        const int gx = static_cast<int>(c.x) / cell;
        const int gy = static_cast<int>(c.y) / cell;
        bool suppressed = false;
        for (int ny = std::max(gy - 1, 0); ny <= std::min(gy + 1, grid_h - 1) && !suppressed; ++ny)
            for (int nx = std::max(gx - 1, 0); nx <= std::min(gx + 1, grid_w - 1) && !suppressed; ++nx)
                for (int idx : grid[static_cast<std::size_t>(ny) * grid_w + nx]) {
                    const double dx = kept[idx].x - c.x;
                    const double dy = kept[idx].y - c.y;
                    if (dx * dx + dy * dy <= kNmsRadiusSq) {
                        suppressed = true;
                        break;
                    }
                }
        if (suppressed) continue;
        grid[static_cast<std::size_t>(gy) * grid_w + gx].push_back(static_cast<int>(kept.size()));
        kept.push_back(c);
        if (static_cast<int>(kept.size()) >= max_points) break;
    }
    return kept;
}

KeypointSet BuiltinMatcher::match(const Raster& a, const Raster& b) const {
    const FloatImage ga = gray_float(a);
    const FloatImage gb = gray_float(b);
    const std::vector<Corner> ca = detect_corners(a, max_points_);
    const std::vector<Corner> cb = detect_corners(b, max_points_);
    if (ca.empty() || cb.empty()) return {};

    std::vector<std::vector<float>> da(ca.size()), db(cb.size());
    for (std::size_t i = 0; i < ca.size(); ++i) da[i] = describe(ga, ca[i]);
    for (std::size_t j = 0; j < cb.size(); ++j) db[j] = describe(gb, cb[j]);

    const MatchHalf ab = nearest_neighbors(da, db);
    const MatchHalf ba = nearest_neighbors(db, da);

    KeypointSet out;
    for (std::size_t i = 0; i < ca.size(); ++i) {
        const int j = ab.best_index[i];
        if (j < 0 || ba.best_index[j] != static_cast<int>(i)) continue; // not mutual
        // Ratio test on both sides keeps match(a,b) and match(b,a) identical.
        const double worst_ratio = std::max(ab.ratio[i], ba.ratio[static_cast<std::size_t>(j)]);
        if (worst_ratio >= kRatioThreshold) continue;
        out.pairs.push_back({{ca[i].x, ca[i].y},
                             {cb[static_cast<std::size_t>(j)].x, cb[static_cast<std::size_t>(j)].y},
                             1.0 - worst_ratio,
                             1});
    }
    return out;
}

KeypointSet SubprocessMatcher::match(const Raster& a, const Raster& b) const {
    namespace fs = std::filesystem;
    const fs::path dir = make_temp_dir("regcd-matcher");
    const fs::path path_a = dir / "a.png";
    const fs::path path_b = dir / "b.png";
    const fs::path path_out = dir / "matches.json";
    KeypointSet result;
    try {
        save_png(a, path_a.string());
        save_png(b, path_b.string());
        const ProcessResult proc =
            run_process({program_, path_a.string(), path_b.string(), path_out.string()});
        if (proc.exit_code != 0)
            throw PluginError("matcher plugin '" + program_ + "' exited with code " +
                              std::to_string(proc.exit_code) + ": " + proc.output);
        try {
            result = load_keypoints_json(path_out.string());
        } catch (const Error& e) {
            throw PluginError("matcher plugin '" + program_ +
                              "' wrote invalid output: " + e.what());
        }
    } catch (...) {
        std::error_code ec;
        fs::remove_all(dir, ec);
        throw;
    }
    std::error_code ec;
    fs::remove_all(dir, ec);
    return result;
}

std::string keypoints_to_json(const KeypointSet& kps) {
    json pairs = json::array();
    for (const KeypointPair& p : kps.pairs) {
        pairs.push_back({{"t1", {p.t1.x, p.t1.y}},
                         {"t2", {p.t2.x, p.t2.y}},
                         {"conf", p.confidence},
                         {"scale", p.source_scale}});
    }
    return json{{"pairs", pairs}}.dump(2) + "\n";
}

KeypointSet keypoints_from_json(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw DecodeError(std::string("keypoint JSON parse failed: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("pairs") || !doc["pairs"].is_array())
        throw DecodeError("keypoint JSON must be an object with a 'pairs' array");
    KeypointSet out;
    for (const json& p : doc["pairs"]) {
        try {
            KeypointPair kp;
            kp.t1 = {p.at("t1").at(0).get<double>(), p.at("t1").at(1).get<double>()};
            kp.t2 = {p.at("t2").at(0).get<double>(), p.at("t2").at(1).get<double>()};
            kp.confidence = p.at("conf").get<double>();
            kp.source_scale = p.value("scale", 1);
            if (!std::isfinite(kp.t1.x) || !std::isfinite(kp.t1.y) || !std::isfinite(kp.t2.x) ||
                !std::isfinite(kp.t2.y) || !std::isfinite(kp.confidence))
                throw DecodeError("keypoint JSON contains non-finite values");
            out.pairs.push_back(kp);
        } catch (const json::exception& e) {
            throw DecodeError(std::string("keypoint JSON entry malformed: ") + e.what());
        }
    }
    return out;
}

void save_keypoints_json(const KeypointSet& kps, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DecodeError(path + ": cannot open file for writing");
    out << keypoints_to_json(kps);
    if (!out) throw DecodeError(path + ": write failed");
}

KeypointSet load_keypoints_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DecodeError(path + ": cannot open file");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return keypoints_from_json(text);
}

KeypointSet relocalize(const KeypointSet& kps) {
    if (kps.empty()) return {};
    const int scale = kps.pairs.front().source_scale;
    if (scale != 2 && scale != 4)
        throw ContractError("relocalize requires source_scale 2 or 4, got " +
                            std::to_string(scale));
    KeypointSet out;
    out.pairs.reserve(kps.size());
    const double s = static_cast<double>(scale);
    for (const KeypointPair& p : kps.pairs) {
        if (p.source_scale != scale)
            throw ContractError("relocalize requires a uniform source_scale, found " +
                                std::to_string(p.source_scale) + " among scale " +
                                std::to_string(scale));
        out.pairs.push_back(
            {{p.t1.x * s, p.t1.y * s}, {p.t2.x * s, p.t2.y * s}, p.confidence, 1});
    }
    return out;
}

HierarchicalMatch hierarchical_match(const Raster& t1, const Raster& t2,
                                     const MatcherPlugin& plugin, const FilterBank& bank) {
    const KeypointSet original = plugin.match(t1, t2);

    const FeaturePyramid pyr1 = build_pyramid(t1, bank);
    const FeaturePyramid pyr2 = build_pyramid(t2, bank);

    KeypointSet at2 = plugin.match(fuse_layerwise(pyr1.scale2), fuse_layerwise(pyr2.scale2));
    for (KeypointPair& p : at2.pairs) p.source_scale = 2;
    KeypointSet at4 = plugin.match(fuse_layerwise(pyr1.scale4), fuse_layerwise(pyr2.scale4));
    for (KeypointPair& p : at4.pairs) p.source_scale = 4;

    HierarchicalMatch result;
    result.count_original = original.size();
    result.count_scale2 = at2.size();
    result.count_scale4 = at4.size();

    std::vector<KeypointPair> candidates = original.pairs;
    for (const KeypointSet& level : {relocalize(at2), relocalize(at4)})
        candidates.insert(candidates.end(), level.pairs.begin(), level.pairs.end());

    // Canonical order first so the outcome is independent of which level
    // produced a pair; then confidence-descending for greedy dedup, keeping
    // the stronger of any two pairs within 1 px on both endpoints.
    auto canonical = [](const KeypointPair& l, const KeypointPair& r) {
        if (l.t1.x != r.t1.x) return l.t1.x < r.t1.x;
        if (l.t1.y != r.t1.y) return l.t1.y < r.t1.y;
        if (l.t2.x != r.t2.x) return l.t2.x < r.t2.x;
        if (l.t2.y != r.t2.y) return l.t2.y < r.t2.y;
        return l.confidence > r.confidence;
    };
    std::sort(candidates.begin(), candidates.end(), canonical);
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const KeypointPair& l, const KeypointPair& r) {
                         return l.confidence > r.confidence;
                     });

    std::vector<KeypointPair> kept;
    for (const KeypointPair& c : candidates) {
        bool duplicate = false;
        for (const KeypointPair& k : kept) {
            const double d1x = k.t1.x - c.t1.x, d1y = k.t1.y - c.t1.y;
            const double d2x = k.t2.x - c.t2.x, d2y = k.t2.y - c.t2.y;
            if (d1x * d1x + d1y * d1y <= 1.0 && d2x * d2x + d2y * d2y <= 1.0) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end(), canonical);
    result.merged.pairs = std::move(kept);
    return result;
}

} // namespace regcd
