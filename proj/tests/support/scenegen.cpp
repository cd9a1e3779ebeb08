#include "scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "regcd/rng.hpp"

namespace regcd::testgen {

namespace {

std::uint8_t clamp_byte(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

double gaussian_draw(SplitMix64& rng) {
    // Box-Muller; uniform01 can return 0, so flip to (0, 1].
    const double u1 = 1.0 - rng.uniform01();
    const double u2 = rng.uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace

Raster make_scene(std::uint64_t seed, int size) {
    SplitMix64 rng(seed);
    std::vector<double> canvas(static_cast<std::size_t>(size) * size);

    // Slowly varying ground illumination.
    const double phase = static_cast<double>(seed % 1024);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            canvas[static_cast<std::size_t>(y) * size + x] =
                90.0 + 25.0 * std::sin(x / 97.0 + phase) + 20.0 * std::cos(y / 83.0 - phase);

    // Rectangular structures. Placement spans collapse to a single slot on
    // canvases smaller than the largest structure, and writes are clipped,
    // so tiny test scenes stay in bounds.
    for (int i = 0; i < 140; ++i) {
        const int w = 12 + static_cast<int>(rng.below(49));
        const int h = 12 + static_cast<int>(rng.below(49));
        const int x0 =
            static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, size - w))));
        const int y0 =
            static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, size - h))));
        const double val = 30.0 + static_cast<double>(rng.below(201));
        for (int y = y0; y < std::min(y0 + h, size); ++y)
            for (int x = x0; x < std::min(x0 + w, size); ++x)
                canvas[static_cast<std::size_t>(y) * size + x] = val;
    }

    // Roads: alternating horizontal / vertical strips, 6 px wide.
    for (int i = 0; i < 6; ++i) {
        const int pos =
            static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, size - 6))));
        const double val = (i % 2 == 0) ? 45.0 : 50.0;
        if (i % 2 == 0) {
            for (int y = pos; y < std::min(pos + 6, size); ++y)
                for (int x = 0; x < size; ++x)
                    canvas[static_cast<std::size_t>(y) * size + x] = val;
        } else {
            for (int y = 0; y < size; ++y)
                for (int x = pos; x < std::min(pos + 6, size); ++x)
                    canvas[static_cast<std::size_t>(y) * size + x] = val;
        }
    }

    Raster out(size, size, 1);
    for (std::size_t i = 0; i < canvas.size(); ++i)
        out.data[i] = clamp_byte(canvas[i] + 3.0 * gaussian_draw(rng));
    return out;
}

ChangeSet insert_changes(const Raster& scene, std::uint64_t seed, int count) {
    SplitMix64 rng(seed ^ 0xC4A7E5ULL);
    ChangeSet cs;
    cs.t2 = scene;
    cs.gt_change = Raster(scene.width, scene.height, 1);

    const int margin = scene.width / 6;
    const int span = std::max(1, scene.width - 2 * margin - 52);
    bool carved_l_shape = false;

    for (int attempt = 0; attempt < 500 && cs.placed < count; ++attempt) {
        const int w = 28 + static_cast<int>(rng.below(25));
        const int h = 28 + static_cast<int>(rng.below(25));
        const int x0 = margin + static_cast<int>(rng.below(static_cast<std::uint64_t>(span)));
        const int y0 = margin + static_cast<int>(rng.below(static_cast<std::uint64_t>(span)));
        if (x0 + w > scene.width || y0 + h > scene.height) continue;

        bool overlaps = false;
        int lo = 255, hi = 0;
        for (int y = y0; y < y0 + h && !overlaps; ++y)
            for (int x = x0; x < x0 + w; ++x) {
                if (cs.gt_change.at(x, y) != 0) {
                    overlaps = true;
                    break;
                }
                lo = std::min<int>(lo, cs.t2.at(x, y));
                hi = std::max<int>(hi, cs.t2.at(x, y));
            }
        if (overlaps) continue;

        std::uint8_t val;
        bool bright;
        if (hi <= 135) {
            val = static_cast<std::uint8_t>(240 + rng.below(16));
            bright = true;
        } else if (lo >= 165) {
            val = static_cast<std::uint8_t>(15 + rng.below(20));
            bright = false;
        } else {
            continue;
        }

        for (int y = y0; y < y0 + h; ++y)
            for (int x = x0; x < x0 + w; ++x) {
                cs.t2.at(x, y) = val;
                cs.gt_change.at(x, y) = 255;
            }

        // Make the first bright change L-shaped: restore the original
        // pixels of its top-right quadrant so the footprint is polygonal.
        if (bright && !carved_l_shape) {
            carved_l_shape = true;
            for (int y = y0; y < y0 + h / 2; ++y)
                for (int x = x0 + w / 2; x < x0 + w; ++x) {
                    cs.t2.at(x, y) = scene.at(x, y);
                    cs.gt_change.at(x, y) = 0;
                }
        }
        ++cs.placed;
    }
    return cs;
}

} // namespace regcd::testgen
