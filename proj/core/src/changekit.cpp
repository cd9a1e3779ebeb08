#include "regcd/changekit.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "regcd/errors.hpp"
#include "regcd/parallel.hpp"

namespace regcd {

namespace {

constexpr double kGateFloor = 0.3;      // guide gate: score * (0.3 + 0.7 g)
constexpr double kScoreDeadZone = 0.6;  // normalized-difference units treated as noise
constexpr double kScoreScale = 2.4;     // units beyond the dead zone mapped onto [0, 1]
constexpr double kSmoothSigma = 2.0;

void require_same_dims(const Raster& a, const Raster& b, const char* what) {
    if (a.width != b.width || a.height != b.height)
        throw ContractError(std::string(what) + ": dimensions " + std::to_string(a.width) +
                            "x" + std::to_string(a.height) + " vs " + std::to_string(b.width) +
                            "x" + std::to_string(b.height));
}

// Zero-mean unit-variance copy; a (near-)constant tile normalizes to zeros.
FloatImage normalize_tile(const Raster& tile) {
    const Raster gray = to_gray(tile);
    double mean = 0.0;
    for (std::uint8_t v : gray.data) mean += v;
    mean /= static_cast<double>(gray.data.size());
    double var = 0.0;
    for (std::uint8_t v : gray.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(gray.data.size());
    const double std_dev = std::sqrt(var);

    FloatImage out(gray.width, gray.height);
    if (std_dev > 1e-9)
        for (std::size_t i = 0; i < gray.data.size(); ++i)
            out.data[i] = static_cast<float>((gray.data[i] - mean) / std_dev);
    return out;
}

FloatImage gaussian_smooth(const FloatImage& img, double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        taps[static_cast<std::size_t>(i + radius)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += taps[static_cast<std::size_t>(i + radius)];
    }
    for (double& t : taps) t /= sum;

    // Separable passes with replicate borders.
    FloatImage horizontal(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += taps[static_cast<std::size_t>(i + radius)] *
                       img.at(std::clamp(x + i, 0, img.width - 1), y);
            horizontal.at(x, y) = static_cast<float>(acc);
        }
    FloatImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += taps[static_cast<std::size_t>(i + radius)] *
                       horizontal.at(x, std::clamp(y + i, 0, img.height - 1));
            out.at(x, y) = static_cast<float>(acc);
        }
    return out;
}

// Union of all proposed masks: the binary structure guide for one tile.
Raster guide_mask(const Raster& tile, const SegmenterPlugin& segmenter) {
    Raster guide(tile.width, tile.height, 1);
    for (const InstanceMask& m : segmenter.propose(tile))
        for (std::size_t i = 0; i < guide.data.size(); ++i)
            if (m.mask().data[i] == 255) guide.data[i] = 255;
    return guide;
}

} // namespace

FloatImage baseline_score(const Raster& tile1, const Raster& tile2,
                          const Raster& guide1, const Raster& guide2) {
    require_same_dims(tile1, tile2, "tile pair");
    require_same_dims(tile1, guide1, "guide 1");
    require_same_dims(tile1, guide2, "guide 2");

    const FloatImage n1 = normalize_tile(tile1);
    const FloatImage n2 = normalize_tile(tile2);
    FloatImage diff(tile1.width, tile1.height);
    for (std::size_t i = 0; i < diff.data.size(); ++i)
        diff.data[i] = std::abs(n1.data[i] - n2.data[i]);

    FloatImage score = gaussian_smooth(diff, kSmoothSigma);
    // Fixed affine map: differences below the dead zone (sub-pixel
    // registration residue, resampling blur) score 0, and 3 units saturate
    // to 1. A per-tile min-max here would blow quantization noise on
    // unchanged tiles up to full scale.
    for (std::size_t i = 0; i < score.data.size(); ++i) {
        const double s =
            std::clamp((score.data[i] - kScoreDeadZone) / kScoreScale, 0.0, 1.0);
        const double g =
            std::max(guide1.data[i], guide2.data[i]) / 255.0;
        score.data[i] = static_cast<float>(s * (kGateFloor + (1.0 - kGateFloor) * g));
    }
    return score;
}

ChangeMap detect_changes(const Raster& t1, const Raster& t2_registered,
                         const Raster& validity, const ClassifierPlugin& plugin,
                         const SegmenterPlugin& segmenter, int tile_size,
                         double threshold, int workers) {
    require_same_dims(t1, t2_registered, "temporal pair");
    require_same_dims(t1, validity, "validity mask");
    if (threshold <= 0.0 || threshold >= 1.0)
        throw ConfigError("binarization threshold must lie in (0, 1), got " +
                          std::to_string(threshold));

    auto [tiles1, layout] = partition(t1, tile_size);
    auto [tiles2, layout2] = partition(t2_registered, tile_size);
    (void)layout2;

    std::vector<FloatImage> scored(tiles1.size());
    auto score_tile = [&](std::size_t i) {
        const Raster guide1 = guide_mask(tiles1[i].payload, segmenter);
        const Raster guide2 = guide_mask(tiles2[i].payload, segmenter);
        FloatImage probs =
            plugin.score(tiles1[i].payload, tiles2[i].payload, guide1, guide2);
        if (probs.width != tiles1[i].payload.width || probs.height != tiles1[i].payload.height)
            throw ContractError("classifier returned " + std::to_string(probs.width) + "x" +
                                std::to_string(probs.height) + " scores for a " +
                                std::to_string(tiles1[i].payload.width) + "x" +
                                std::to_string(tiles1[i].payload.height) + " tile");
        scored[i] = std::move(probs);
    };
    const int effective_workers =
        (plugin.thread_safe() && segmenter.thread_safe()) ? workers : 1;
    parallel_for(tiles1.size(), effective_workers, score_tile);

    ChangeMap map;
    map.threshold = threshold;
    map.probs = FloatImage(t1.width, t1.height);
    for (std::size_t i = 0; i < tiles1.size(); ++i)
        for (int y = 0; y < scored[i].height; ++y)
            for (int x = 0; x < scored[i].width; ++x)
                map.probs.at(tiles1[i].origin_x + x, tiles1[i].origin_y + y) =
                    scored[i].at(x, y);

    for (int y = 0; y < t1.height; ++y)
        for (int x = 0; x < t1.width; ++x)
            if (validity.at(x, y) == 0) map.probs.at(x, y) = 0.0f;

    map.binary = Raster(t1.width, t1.height, 1);
    for (std::size_t i = 0; i < map.probs.data.size(); ++i)
        if (map.probs.data[i] >= threshold) map.binary.data[i] = 255;
    return map;
}

ChangeMap apply_overlap_mask(const ChangeMap& m_init, const Raster& mask_ob) {
    require_same_dims(m_init.binary, mask_ob, "overlap mask");
    ChangeMap out;
    out.threshold = m_init.threshold;
    out.probs = m_init.probs;
    out.binary = m_init.binary;
    for (std::size_t i = 0; i < out.probs.data.size(); ++i) {
        const double factor = mask_ob.data[i] / 255.0;
        out.probs.data[i] = static_cast<float>(out.probs.data[i] * factor);
        out.binary.data[i] =
            static_cast<std::uint8_t>(std::lround(out.binary.data[i] * factor));
    }
    return out;
}

double weighted_bce(const FloatImage& pred, const Raster& target, double omega) {
    if (omega <= 0.0) throw ContractError("positive-class weight must be positive");
    if (pred.width != target.width || pred.height != target.height)
        throw ContractError("prediction and target dimensions disagree");

    double total = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double y = std::clamp(static_cast<double>(pred.data[i]), 1e-7, 1.0 - 1e-7);
        const std::uint8_t t = target.data[i];
        if (t != 0 && t != 255)
            throw ContractError("target must be 0/255, found value " + std::to_string(t));
        total -= t == 255 ? omega * std::log(y) : std::log(1.0 - y);
    }
    return total / static_cast<double>(pred.data.size());
}

} // namespace regcd
