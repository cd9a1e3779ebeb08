#include "regcd/raster.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "regcd/errors.hpp"

namespace regcd {

Raster::Raster(int w, int h, int c, std::uint8_t fill) : width(w), height(h), channels(c) {
    if (w < 1 || h < 1)
        throw ContractError("raster dimensions must be positive, got " +
                            std::to_string(w) + "x" + std::to_string(h));
    if (c != 1 && c != 3)
        throw ContractError("raster channels must be 1 or 3, got " + std::to_string(c));
    data.assign(static_cast<std::size_t>(w) * h * c, fill);
}

Raster to_gray(const Raster& img) {
    if (img.channels == 1) return img;
    Raster out(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double v = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
                             0.114 * img.at(x, y, 2);
            out.at(x, y) = static_cast<std::uint8_t>(std::lround(v));
        }
    return out;
}

Raster rotate90_ccw(const Raster& img) {
    Raster out(img.height, img.width, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(y, img.width - 1 - x, c) = img.at(x, y, c);
    return out;
}

Raster rotate180(const Raster& img) {
    Raster out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(img.width - 1 - x, img.height - 1 - y, c) = img.at(x, y, c);
    return out;
}

std::pair<std::vector<Tile>, GridLayout> partition(const Raster& img, int tile_size) {
    if (tile_size < 32)
        throw ConfigError("tile size must be at least 32, got " + std::to_string(tile_size));
    GridLayout layout;
    layout.tile_size = tile_size;
    layout.cols = (img.width + tile_size - 1) / tile_size;
    layout.rows = (img.height + tile_size - 1) / tile_size;
    layout.parent_width = img.width;
    layout.parent_height = img.height;

    std::vector<Tile> tiles;
    tiles.reserve(static_cast<std::size_t>(layout.cols) * layout.rows);
    for (int row = 0; row < layout.rows; ++row) {
        for (int col = 0; col < layout.cols; ++col) {
            const int ox = col * tile_size;
            const int oy = row * tile_size;
            const int tw = std::min(tile_size, img.width - ox);
            const int th = std::min(tile_size, img.height - oy);
            Tile t{ox, oy, Raster(tw, th, img.channels)};
            for (int y = 0; y < th; ++y)
                for (int x = 0; x < tw; ++x)
                    for (int c = 0; c < img.channels; ++c)
                        t.payload.at(x, y, c) = img.at(ox + x, oy + y, c);
            tiles.push_back(std::move(t));
        }
    }
    return {std::move(tiles), layout};
}

Raster stitch(const std::vector<Tile>& tiles, const GridLayout& layout) {
    if (tiles.empty()) throw AssemblyError("no tiles to stitch");
    const int channels = tiles.front().payload.channels;
    Raster out(layout.parent_width, layout.parent_height, channels);

    std::set<std::pair<int, int>> seen;
    for (const Tile& t : tiles) {
        const std::string origin =
            "(" + std::to_string(t.origin_x) + ", " + std::to_string(t.origin_y) + ")";
        if (t.origin_x % layout.tile_size != 0 || t.origin_y % layout.tile_size != 0 ||
            t.origin_x < 0 || t.origin_y < 0 || t.origin_x >= layout.parent_width ||
            t.origin_y >= layout.parent_height)
            throw AssemblyError("tile origin " + origin + " is not on the grid");
        if (!seen.insert({t.origin_x, t.origin_y}).second)
            throw AssemblyError("duplicate tile origin " + origin);
        const int expect_w = std::min(layout.tile_size, layout.parent_width - t.origin_x);
        const int expect_h = std::min(layout.tile_size, layout.parent_height - t.origin_y);
        if (t.payload.width != expect_w || t.payload.height != expect_h ||
            t.payload.channels != channels)
            throw AssemblyError("tile at origin " + origin + " has unexpected shape");
        for (int y = 0; y < t.payload.height; ++y)
            for (int x = 0; x < t.payload.width; ++x)
                for (int c = 0; c < channels; ++c)
                    out.at(t.origin_x + x, t.origin_y + y, c) = t.payload.at(x, y, c);
    }
    if (seen.size() != static_cast<std::size_t>(layout.cols) * layout.rows) {
        for (int row = 0; row < layout.rows; ++row)
            for (int col = 0; col < layout.cols; ++col)
                if (!seen.count({col * layout.tile_size, row * layout.tile_size}))
                    throw AssemblyError("missing tile origin (" +
                                        std::to_string(col * layout.tile_size) + ", " +
                                        std::to_string(row * layout.tile_size) + ")");
    }
    return out;
}

WarpResult warp_raster(const Raster& src, const Homography& h, int out_width, int out_height) {
    const Homography hinv = h.inverse();
    const auto& m = hinv.data();
    WarpResult result{Raster(out_width, out_height, src.channels),
                      Raster(out_width, out_height, 1)};

    const double max_x = src.width - 1.0;
    const double max_y = src.height - 1.0;
    for (int y = 0; y < out_height; ++y) {
        for (int x = 0; x < out_width; ++x) {
            const double u = m[0] * x + m[1] * y + m[2];
            const double v = m[3] * x + m[4] * y + m[5];
            const double w = m[6] * x + m[7] * y + m[8];
            if (std::abs(w) <= 1e-12) continue;
            const double sx = u / w;
            const double sy = v / w;
            if (sx < 0.0 || sx > max_x || sy < 0.0 || sy > max_y) continue;

            // Bilinear sample; x1/y1 are clamped so samples on the last
            // row/column read the edge texel with weight 0 on the far side.
            const int x0 = static_cast<int>(sx);
            const int y0 = static_cast<int>(sy);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const int y1 = std::min(y0 + 1, src.height - 1);
            const double fx = sx - x0;
            const double fy = sy - y0;
            for (int c = 0; c < src.channels; ++c) {
                const double top = src.at(x0, y0, c) * (1.0 - fx) + src.at(x1, y0, c) * fx;
                const double bot = src.at(x0, y1, c) * (1.0 - fx) + src.at(x1, y1, c) * fx;
                const double val = top * (1.0 - fy) + bot * fy;
                result.image.at(x, y, c) = static_cast<std::uint8_t>(std::lround(val));
            }
            result.validity.at(x, y) = 255;
        }
    }
    return result;
}

} // namespace regcd
