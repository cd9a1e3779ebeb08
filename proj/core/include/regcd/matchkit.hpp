#pragma once

#include <string>
#include <vector>

#include "regcd/featpyr.hpp"
#include "regcd/geometry.hpp"
#include "regcd/raster.hpp"

namespace regcd {

/// One T1/T2 correspondence with sub-pixel coordinates in the frame of the
/// image (or feature map) it was detected on, identified by source_scale.
struct KeypointPair {
    Point t1;
    Point t2;
    double confidence = 0.0;
    int source_scale = 1; // 1, 2 or 4
};

struct KeypointSet {
    std::vector<KeypointPair> pairs;

    std::size_t size() const { return pairs.size(); }
    bool empty() const { return pairs.empty(); }
};

/// Serialize as {"pairs":[{"t1":[x,y],"t2":[x,y],"conf":c,"scale":s},...]}.
/// This is also the wire format of subprocess matcher plugins.
std::string keypoints_to_json(const KeypointSet& kps);
KeypointSet keypoints_from_json(const std::string& json_text);
void save_keypoints_json(const KeypointSet& kps, const std::string& path);
KeypointSet load_keypoints_json(const std::string& path);

/// Pluggable pairwise matcher. Returned pairs have source_scale 1 relative
/// to the rasters given (the caller re-tags scale for feature-map inputs).
class MatcherPlugin {
public:
    virtual ~MatcherPlugin() = default;
    virtual KeypointSet match(const Raster& a, const Raster& b) const = 0;
    /// Plugins that cannot run concurrently return false and are serialized.
    virtual bool thread_safe() const { return true; }
};

struct Corner {
    double x = 0.0;
    double y = 0.0;
    double strength = 0.0;
};

/// Shi-Tomasi corners: local maxima of the minimum structure-tensor
/// eigenvalue, non-maximum suppression radius 4 px, strongest first,
/// at most max_points. Constant images yield an empty list.
std::vector<Corner> detect_corners(const Raster& img, int max_points);

/// Built-in matcher: Shi-Tomasi corners, 11x11 mean/variance-normalized
/// patch descriptors sampled in a gradient-oriented frame, SSD distance,
/// mutual nearest neighbor with a 0.9 ratio test on both sides.
/// confidence = 1 - best/second for the binding (worse) side.
class BuiltinMatcher : public MatcherPlugin {
public:
    explicit BuiltinMatcher(int max_points = 1500) : max_points_(max_points) {}
    KeypointSet match(const Raster& a, const Raster& b) const override;

private:
    int max_points_;
};

/// External matcher run as a subprocess: argv = {program, path_a, path_b,
/// out_json}; the program writes the KeypointSet JSON format to out_json.
/// Nonzero exit or unparsable output raises PluginError.
class SubprocessMatcher : public MatcherPlugin {
public:
    explicit SubprocessMatcher(std::string program) : program_(std::move(program)) {}
    KeypointSet match(const Raster& a, const Raster& b) const override;
    bool thread_safe() const override { return false; }

private:
    std::string program_;
};

/// Multiply all coordinates by the shared source_scale (2 or 4) and re-tag
/// the pairs as scale 1. Exactly linear, no rounding. Mixed or invalid
/// scales throw ContractError; the empty set passes through.
KeypointSet relocalize(const KeypointSet& kps);

struct HierarchicalMatch {
    KeypointSet merged;
    std::size_t count_original = 0; // full-resolution matches
    std::size_t count_scale2 = 0;   // matches on the fused scale-2 maps
    std::size_t count_scale4 = 0;   // matches on the fused scale-4 maps
};

/// Match at full resolution and on the fused scale-2/scale-4 feature maps,
/// re-localize the map matches to source pixels, and merge. Pairs whose T1
/// and T2 endpoints both fall within 1 px of a retained pair are dropped,
/// keeping the higher confidence. The merge is deterministic: candidates are
/// sorted by (x1, y1, x2, y2) before deduplication.
HierarchicalMatch hierarchical_match(const Raster& t1, const Raster& t2,
                                     const MatcherPlugin& plugin, const FilterBank& bank);

} // namespace regcd
