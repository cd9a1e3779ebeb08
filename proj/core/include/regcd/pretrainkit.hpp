#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "regcd/raster.hpp"

namespace regcd {

/// Binary instance proposal. pixel_portion is recomputed on construction
/// from the 0/255 mask, so the stored fraction can never drift from the
/// pixels. Non-binary or multi-channel rasters throw ContractError.
class InstanceMask {
public:
    explicit InstanceMask(Raster mask);

    const Raster& mask() const { return mask_; }
    double pixel_portion() const { return pixel_portion_; }
    std::uint64_t on_count() const { return on_count_; }

private:
    Raster mask_;
    std::uint64_t on_count_ = 0;
    double pixel_portion_ = 0.0;
};

using EmbeddingVector = std::vector<double>;

/// Exponentially averaged clustering center, zero-initialized.
struct ClusterCenter {
    EmbeddingVector values;
    double momentum = 0.9;

    explicit ClusterCenter(std::size_t dim, double m = 0.9)
        : values(dim, 0.0), momentum(m) {}
};

/// Keep exactly the masks with 0.10 <= pixel_portion <= 0.50, inclusive on
/// both bounds, preserving order.
std::vector<InstanceMask> filter_masks(const std::vector<InstanceMask>& masks);

/// Element-wise product with the binary mask: img where mask is on, else 0.
Raster extract_instance(const Raster& img, const InstanceMask& mask);

struct AugmentParams {
    int rotation_deg = 0;    // 0, 90 or 180
    double brightness = 1.0; // all three factors in [0.8, 1.2] when drawn
    double contrast = 1.0;
    double saturation = 1.0;
};

/// Draw augmentation parameters from a seed: rotation applied with
/// probability 0.5 (then 90 or 180, uniform), jitter factors uniform in
/// [0.8, 1.2]. Five RNG draws in a fixed order, so the stream is stable.
AugmentParams draw_augment_params(std::uint64_t seed);

/// Rotation first (lossless), then brightness, contrast, saturation jitter
/// in that order, each clamped to [0, 255]. Saturation is a no-op on gray.
Raster apply_augment(const Raster& img, const AugmentParams& params);

/// draw_augment_params + apply_augment; deterministic given the seed.
Raster augment_view(const Raster& img, std::uint64_t seed);

/// Centered temperature-scaled cross-entropy between two embeddings:
///   D(x, y) = -sum_j softmax((x - C)/tau)_j * log_softmax(y/tau)_j
/// computed with max-subtracted (numerically stable) softmax.
/// tau <= 0 or mismatched dimensions throw ContractError.
double dino_loss_term(const EmbeddingVector& x, const EmbeddingVector& y,
                      const ClusterCenter& center, double tau);

/// D(pt1, ps2)/2 + D(pt2, ps1)/2.
double symmetric_pretrain_loss(const EmbeddingVector& pt1, const EmbeddingVector& pt2,
                               const EmbeddingVector& ps1, const EmbeddingVector& ps2,
                               const ClusterCenter& center, double tau);

/// C' = m*C + (1-m) * sum_i outputs_i. Empty list throws ContractError.
ClusterCenter update_center(const ClusterCenter& center,
                            const std::vector<EmbeddingVector>& teacher_outputs);

/// Pluggable class-agnostic mask proposer.
class SegmenterPlugin {
public:
    virtual ~SegmenterPlugin() = default;
    virtual std::vector<InstanceMask> propose(const Raster& img) const = 0;
    virtual bool thread_safe() const { return true; }
};

/// Built-in proposer: adaptive mean threshold (window 31 px, offset 5) on the
/// grayscale image, then 4-connected components, one mask per component.
class BuiltinSegmenter : public SegmenterPlugin {
public:
    std::vector<InstanceMask> propose(const Raster& img) const override;
};

/// External segmenter run as a subprocess: argv = {program, img_path,
/// out_json}; the program writes {"masks": ["rel/path.png", ...]} with one
/// 0/255 PNG per proposal, paths relative to the JSON file.
class SubprocessSegmenter : public SegmenterPlugin {
public:
    explicit SubprocessSegmenter(std::string program) : program_(std::move(program)) {}
    std::vector<InstanceMask> propose(const Raster& img) const override;
    bool thread_safe() const override { return false; }

private:
    std::string program_;
};

/// Propose masks, keep the 10-50% portion band, and cut one instance image
/// per surviving mask.
std::vector<Raster> generate_instances(const Raster& img, const SegmenterPlugin& segmenter);

} // namespace regcd
