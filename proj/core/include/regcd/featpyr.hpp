#pragma once

#include <string>
#include <vector>

#include "regcd/raster.hpp"

namespace regcd {

/// Multi-channel real-valued feature map at a fixed downsampling factor.
/// Planar storage: plane(c) is a width*height block.
struct FeatureMap {
    int width = 0;
    int height = 0;
    int channels = 0;
    int scale = 1; // downsampling factor relative to the source image: 1, 2 or 4
    std::vector<float> data;

    FeatureMap() = default;
    FeatureMap(int w, int h, int c, int s)
        : width(w), height(h), channels(c), scale(s),
          data(static_cast<std::size_t>(w) * h * c, 0.0f) {}

    float at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    float& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
};

struct Kernel {
    int size = 0; // odd side length
    std::vector<double> taps; // size*size, row-major
    std::string tag;

    double at(int x, int y) const { return taps[static_cast<std::size_t>(y) * size + x]; }
};

/// Bank of odd-sized filters. Derivative kernels sum to zero by construction.
struct FilterBank {
    std::vector<Kernel> kernels;
};

/// Default bank: first-order Gaussian derivatives (x, y), second-order
/// (xx, yy) and one smoothing Gaussian, all at sigma = 1.5. A deterministic
/// stand-in for learned convolution channels.
FilterBank default_filter_bank();

struct FeaturePyramid {
    FeatureMap scale2; // one octave down
    FeatureMap scale4; // two octaves down
};

/// Filter responses at scales 2 and 4. Input is converted to grayscale, each
/// octave is a 2x box-filter average before subsampling (anti-aliasing), and
/// every bank kernel contributes one channel per level. Map dimensions obey
/// ceil(source_dim / scale). Empty bank throws ConfigError.
FeaturePyramid build_pyramid(const Raster& img, const FilterBank& bank);

/// Collapse a feature map to one 8-bit channel: per-pixel sum over channels,
/// then min-max affine rescale to [0, 255] (constant maps rescale to 0).
/// Non-finite samples throw NumericError.
Raster fuse_layerwise(const FeatureMap& fm);

} // namespace regcd
