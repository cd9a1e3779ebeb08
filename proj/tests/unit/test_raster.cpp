#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "regcd/errors.hpp"
#include "regcd/raster.hpp"
#include "regcd/rng.hpp"

using namespace regcd;

namespace {

Raster random_raster(SplitMix64& rng, int w, int h, int c) {
    Raster r(w, h, c);
    for (auto& v : r.data) v = static_cast<std::uint8_t>(rng.below(256));
    return r;
}

} // namespace

TEST_CASE("raster construction validates shape") {
    CHECK_THROWS_AS(Raster(0, 5, 1), ContractError);
    CHECK_THROWS_AS(Raster(5, -1, 1), ContractError);
    CHECK_THROWS_AS(Raster(5, 5, 2), ContractError);
    CHECK_THROWS_AS(Raster(5, 5, 4), ContractError);

    const Raster r(3, 2, 3, 7);
    CHECK(r.sample_count() == 18);
    CHECK(r.at(2, 1, 2) == 7);
}

TEST_CASE("grayscale conversion uses Rec.601 weights with rounding") {
    Raster rgb(4, 1, 3);
    const std::array<std::array<std::uint8_t, 3>, 4> px = {
        {{255, 0, 0}, {0, 255, 0}, {0, 0, 255}, {10, 20, 30}}};
    for (int x = 0; x < 4; ++x)
        for (int c = 0; c < 3; ++c) rgb.at(x, 0, c) = px[x][c];

    const Raster g = to_gray(rgb);
    REQUIRE(g.channels == 1);
    CHECK(g.at(0, 0) == 76);  // round(0.299 * 255)
    CHECK(g.at(1, 0) == 150); // round(0.587 * 255)
    CHECK(g.at(2, 0) == 29);  // round(0.114 * 255)
    CHECK(g.at(3, 0) == 18);  // round(2.99 + 11.74 + 3.42)

    SplitMix64 rng(3);
    const Raster gray_in = random_raster(rng, 7, 5, 1);
    const Raster same = to_gray(gray_in);
    CHECK(same.data == gray_in.data);
}

TEST_CASE("quarter and half turns are exact and compose") {
    // 3x2 single channel with distinct values.
    Raster img(3, 2, 1);
    std::uint8_t v = 1;
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x) img.at(x, y) = v++;

    const Raster q = rotate90_ccw(img);
    REQUIRE(q.width == 2);
    REQUIRE(q.height == 3);
    // Column x of the input becomes row (width-1-x) of the output.
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x) CHECK(q.at(y, img.width - 1 - x) == img.at(x, y));

    SplitMix64 rng(17);
    const Raster rcol = random_raster(rng, 9, 4, 3);
    const Raster once = rotate90_ccw(rcol);
    const Raster twice = rotate90_ccw(once);
    CHECK(twice.data == rotate180(rcol).data);
    const Raster full = rotate90_ccw(rotate90_ccw(twice));
    CHECK(full.data == rcol.data);
    CHECK(rotate180(rotate180(rcol)).data == rcol.data);
}

TEST_CASE("partition covers the raster with true-size edge tiles") {
    SplitMix64 rng(21);
    const Raster img = random_raster(rng, 100, 70, 1);
    const auto [tiles, layout] = partition(img, 32);

    CHECK(layout.cols == 4);
    CHECK(layout.rows == 3);
    CHECK(layout.tile_size == 32);
    CHECK(layout.parent_width == 100);
    CHECK(layout.parent_height == 70);
    REQUIRE(tiles.size() == 12);

    for (const Tile& t : tiles) {
        CHECK(t.origin_x % 32 == 0);
        CHECK(t.origin_y % 32 == 0);
        const int expect_w = std::min(32, 100 - t.origin_x);
        const int expect_h = std::min(32, 70 - t.origin_y);
        CHECK(t.payload.width == expect_w);
        CHECK(t.payload.height == expect_h);
        for (int y = 0; y < expect_h; ++y)
            for (int x = 0; x < expect_w; ++x)
                REQUIRE(t.payload.at(x, y) == img.at(t.origin_x + x, t.origin_y + y));
    }

    CHECK_THROWS_AS(partition(img, 31), ConfigError);
    CHECK_THROWS_AS(partition(img, 0), ConfigError);
}

TEST_CASE("stitch inverts partition for assorted shapes") {
    SplitMix64 rng(42);
    const std::array<std::array<int, 3>, 6> shapes = {
        {{64, 64, 1}, {100, 70, 3}, {5, 37, 1}, {256, 31, 3}, {33, 33, 1}, {128, 257, 1}}};
    for (const auto& s : shapes) {
        const Raster img = random_raster(rng, s[0], s[1], s[2]);
        const auto [tiles, layout] = partition(img, 32);
        const Raster back = stitch(tiles, layout);
        REQUIRE(back.same_shape(img));
        CHECK(back.data == img.data);
    }
}

TEST_CASE("stitch rejects broken tile sets naming the origin") {
    SplitMix64 rng(33);
    const Raster img = random_raster(rng, 96, 64, 1);
    const auto [tiles, layout] = partition(img, 32);

    auto missing = tiles;
    missing.pop_back();
    CHECK_THROWS_AS(stitch(missing, layout), AssemblyError);
    CHECK_THROWS_WITH_AS(stitch(missing, layout),
                         doctest::Contains("(64, 32)"), AssemblyError);

    auto dup = tiles;
    dup.push_back(dup.front());
    CHECK_THROWS_AS(stitch(dup, layout), AssemblyError);

    auto off = tiles;
    off[1].origin_x = 17;
    CHECK_THROWS_AS(stitch(off, layout), AssemblyError);

    auto reshaped = tiles;
    reshaped[0].payload = Raster(8, 8, 1);
    CHECK_THROWS_AS(stitch(reshaped, layout), AssemblyError);

    CHECK_THROWS_AS(stitch({}, layout), AssemblyError);
}

TEST_CASE("identity warp is byte-exact with full validity") {
    SplitMix64 rng(55);
    const Raster img = random_raster(rng, 41, 23, 3);
    const WarpResult wr = warp_raster(img, Homography::identity(), 41, 23);
    CHECK(wr.image.data == img.data);
    CHECK(std::all_of(wr.validity.data.begin(), wr.validity.data.end(),
                      [](std::uint8_t v) { return v == 255; }));
}

TEST_CASE("integer translation warp is byte-exact on the valid region") {
    SplitMix64 rng(56);
    const Raster img = random_raster(rng, 40, 30, 1);
    const int tx = 7, ty = -3;
    const WarpResult wr =
        warp_raster(img, Homography::translation(tx, ty), 40, 30);
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 40; ++x) {
            const int sx = x - tx, sy = y - ty;
            const bool in = sx >= 0 && sx < 40 && sy >= 0 && sy < 30;
            REQUIRE(wr.validity.at(x, y) == (in ? 255 : 0));
            REQUIRE(wr.image.at(x, y) == (in ? img.at(sx, sy) : 0));
        }
}

TEST_CASE("quarter turn expressed as a homography matches direct indexing") {
    SplitMix64 rng(57);
    const int n = 16;
    const Raster img = random_raster(rng, n, n, 1);
    // Forward map of rotate90_ccw: (x, y) -> (y, n-1-x).
    const Homography h(std::array<double, 9>{0, 1, 0, -1, 0, double(n - 1), 0, 0, 1});
    const WarpResult wr = warp_raster(img, h, n, n);
    CHECK(wr.image.data == rotate90_ccw(img).data);
    CHECK(std::all_of(wr.validity.data.begin(), wr.validity.data.end(),
                      [](std::uint8_t v) { return v == 255; }));
}

TEST_CASE("warp validity agrees with an inverse-mapping recomputation") {
    SplitMix64 rng(58);
    const Raster img = random_raster(rng, 50, 40, 1);
    const Homography h = Homography::rotation_deg(12.0, 25.0, 20.0) *
                         Homography::translation(3.25, -1.5);
    const WarpResult wr = warp_raster(img, h, 50, 40);
    const Homography hinv = h.inverse();
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 50; ++x) {
            const Point s = apply_h(hinv, {double(x), double(y)});
            const bool in = s.x >= 0.0 && s.x <= 49.0 && s.y >= 0.0 && s.y <= 39.0;
            REQUIRE((wr.validity.at(x, y) == 255) == in);
            if (!in) REQUIRE(wr.image.at(x, y) == 0);
        }
}

TEST_CASE("warp output can have its own dimensions") {
    SplitMix64 rng(59);
    const Raster img = random_raster(rng, 20, 20, 1);
    const WarpResult wr = warp_raster(img, Homography::identity(), 30, 10);
    CHECK(wr.image.width == 30);
    CHECK(wr.image.height == 10);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 30; ++x) {
            REQUIRE(wr.validity.at(x, y) == (x < 20 ? 255 : 0));
            REQUIRE(wr.image.at(x, y) == (x < 20 ? img.at(x, y) : 0));
        }
}
