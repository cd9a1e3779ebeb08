#pragma once

#include "regcd/pretrainkit.hpp"
#include "regcd/raster.hpp"

namespace regcd {

/// Per-pixel change scores plus their binarization, in T1 coordinates.
/// binary is 255 exactly where probs >= threshold.
struct ChangeMap {
    FloatImage probs;
    Raster binary;
    double threshold = 0.5;
};

/// Pluggable tile scorer. Output values lie in [0, 1] and share the tile
/// dimensions; guides are 0/255 structure proposals for each epoch.
class ClassifierPlugin {
public:
    virtual ~ClassifierPlugin() = default;
    virtual FloatImage score(const Raster& tile1, const Raster& tile2,
                             const Raster& guide1, const Raster& guide2) const = 0;
    virtual bool thread_safe() const { return true; }
};

/// Training-free default scorer: per-tile mean/std normalization of each
/// image, absolute difference, Gaussian smoothing (sigma 2), fixed affine map
/// to [0, 1], then a guided gate score * (alpha + (1-alpha) * g) with
/// g = max(guide1, guide2)/255 and alpha = 0.3.
FloatImage baseline_score(const Raster& tile1, const Raster& tile2,
                          const Raster& guide1, const Raster& guide2);

class BaselineClassifier : public ClassifierPlugin {
public:
    FloatImage score(const Raster& tile1, const Raster& tile2,
                     const Raster& guide1, const Raster& guide2) const override {
        return baseline_score(tile1, tile2, guide1, guide2);
    }
};

/// Tile both images, score every tile pair with per-tile guidance masks from
/// the segmenter, stitch the probability tiles, zero probabilities where
/// validity == 0, and binarize at threshold. Tiles are independent, so the
/// result does not depend on processing order; `workers` > 1 scores tiles
/// concurrently (plugins that are not thread safe are serialized).
ChangeMap detect_changes(const Raster& t1, const Raster& t2_registered,
                         const Raster& validity, const ClassifierPlugin& plugin,
                         const SegmenterPlugin& segmenter, int tile_size,
                         double threshold, int workers = 1);

/// M_final = M_init elementwise-multiplied by mask/255, probabilities and
/// binarization both.
ChangeMap apply_overlap_mask(const ChangeMap& m_init, const Raster& mask_ob);

/// Mean over pixels of -(omega * y_hat * log(y) + (1 - y_hat) * log(1 - y)),
/// predictions clamped to [1e-7, 1 - 1e-7]. target is a 0/255 raster read as
/// y_hat in {0, 1}. omega <= 0 throws ContractError.
double weighted_bce(const FloatImage& pred, const Raster& target, double omega);

} // namespace regcd
