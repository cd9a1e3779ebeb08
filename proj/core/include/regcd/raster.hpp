#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "regcd/geometry.hpp"

namespace regcd {

/// 8-bit image grid, row-major, interleaved channels (1 = gray, 3 = RGB).
/// Immutable by convention once filled: every pipeline operation takes
/// rasters by const reference and returns new values, so sharing across
/// workers is safe.
struct Raster {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;

    Raster() = default;
    /// Allocates width*height*channels samples, zero-filled.
    /// Throws ContractError on non-positive dims or channels not in {1,3}.
    Raster(int w, int h, int c, std::uint8_t fill = 0);

    std::uint8_t at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::size_t sample_count() const { return data.size(); }

    bool same_shape(const Raster& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

/// Single-channel float image used for probability maps and intermediates.
struct FloatImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    FloatImage() = default;
    FloatImage(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// Grayscale conversion (Rec.601 weights, rounded); identity for 1-channel.
Raster to_gray(const Raster& img);

/// Lossless quarter-turn counter-clockwise; output is height x width.
Raster rotate90_ccw(const Raster& img);
/// Lossless half-turn.
Raster rotate180(const Raster& img);

struct Tile {
    int origin_x = 0;
    int origin_y = 0;
    Raster payload;
};

struct GridLayout {
    int tile_size = 0;
    int cols = 0;
    int rows = 0;
    int parent_width = 0;
    int parent_height = 0;
};

/// Cut img into non-overlapping tiles; edge tiles keep their true (smaller)
/// dimensions. tile_size < 32 throws ConfigError.
std::pair<std::vector<Tile>, GridLayout> partition(const Raster& img, int tile_size);

/// Reassemble a complete tile grid. Missing or duplicate origins, or a tile
/// with unexpected dimensions, throw AssemblyError naming the origin.
/// stitch(partition(img)) == img exactly.
Raster stitch(const std::vector<Tile>& tiles, const GridLayout& layout);

struct WarpResult {
    Raster image;
    /// 1-channel 0/255 mask; 255 exactly where the inverse-mapped sample
    /// point lies within [0, w-1] x [0, h-1] of the source.
    Raster validity;
};

/// Inverse-mapped bilinear warp: output(x, y) samples src at h^-1 * (x, y, 1).
/// Out-of-bounds samples are 0 and marked invalid.
WarpResult warp_raster(const Raster& src, const Homography& h, int out_width, int out_height);

} // namespace regcd
