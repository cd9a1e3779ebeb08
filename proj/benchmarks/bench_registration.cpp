#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "regcd/featpyr.hpp"
#include "regcd/geomest.hpp"
#include "regcd/geometry.hpp"
#include "regcd/matchkit.hpp"
#include "regcd/raster.hpp"
#include "regcd/rng.hpp"

namespace {

using namespace regcd;

// Blocky synthetic scene with enough corners to keep the matcher honest.
Raster make_image(std::uint64_t seed, int size) {
    SplitMix64 rng(seed);
    Raster img(size, size, 1);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(80 + rng.below(21));
    for (int i = 0; i < size / 6; ++i) {
        const int w = 8 + static_cast<int>(rng.below(40));
        const int h = 8 + static_cast<int>(rng.below(40));
        const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(size - w)));
        const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(size - h)));
        const auto val = static_cast<std::uint8_t>(30 + rng.below(200));
        for (int y = y0; y < y0 + h; ++y)
            for (int x = x0; x < x0 + w; ++x) img.at(x, y) = val;
    }
    return img;
}

Homography distortion(int size) {
    const double c = (size - 1) / 2.0;
    return Homography::translation(size * 0.05, -size * 0.03) *
           Homography::rotation_deg(8.0, c, c);
}

KeypointSet correspondence_set(std::uint64_t seed, const Homography& h, int inliers,
                               int outliers, double extent) {
    SplitMix64 rng(seed);
    KeypointSet set;
    for (int i = 0; i < inliers; ++i) {
        const Point t2{rng.uniform(0.0, extent), rng.uniform(0.0, extent)};
        Point t1 = apply_h(h, t2);
        t1.x += rng.uniform(-1.0, 1.0);
        t1.y += rng.uniform(-1.0, 1.0);
        set.pairs.push_back({t1, t2, 1.0, 1});
    }
    for (int i = 0; i < outliers; ++i)
        set.pairs.push_back({{rng.uniform(0.0, extent), rng.uniform(0.0, extent)},
                             {rng.uniform(0.0, extent), rng.uniform(0.0, extent)},
                             0.5,
                             1});
    return set;
}

void BM_DltHomography(benchmark::State& state) {
    const Homography h = distortion(1024);
    SplitMix64 rng(1);
    std::vector<Point> src, dst;
    for (int i = 0; i < 20; ++i) {
        const Point p{rng.uniform(0.0, 1024.0), rng.uniform(0.0, 1024.0)};
        src.push_back(p);
        dst.push_back(apply_h(h, p));
    }
    for (auto _ : state) benchmark::DoNotOptimize(dlt_homography(src, dst));
}
BENCHMARK(BM_DltHomography);

void BM_RansacHomography(benchmark::State& state) {
    const Homography h = distortion(1024);
    const KeypointSet set =
        correspondence_set(2, h, static_cast<int>(state.range(0) * 7 / 10),
                           static_cast<int>(state.range(0) * 3 / 10), 1024.0);
    RansacConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(ransac_homography(set, cfg));
}
BENCHMARK(BM_RansacHomography)->Arg(200)->Arg(1000);

void BM_WarpRaster(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const Raster img = make_image(3, size);
    const Homography h = distortion(size);
    for (auto _ : state) benchmark::DoNotOptimize(warp_raster(img, h, size, size));
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_WarpRaster)->Arg(512)->Arg(1024);

void BM_BuildPyramid(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const Raster img = make_image(4, size);
    const FilterBank bank = default_filter_bank();
    for (auto _ : state) benchmark::DoNotOptimize(build_pyramid(img, bank));
}
BENCHMARK(BM_BuildPyramid)->Arg(256)->Arg(512);

void BM_DetectCorners(benchmark::State& state) {
    const Raster img = make_image(5, 512);
    for (auto _ : state) benchmark::DoNotOptimize(detect_corners(img, 1500));
}
BENCHMARK(BM_DetectCorners);

void BM_HierarchicalMatch(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const Raster t1 = make_image(6, size);
    const Raster t2 = warp_raster(t1, distortion(size), size, size).image;
    const BuiltinMatcher matcher;
    const FilterBank bank = default_filter_bank();
    for (auto _ : state)
        benchmark::DoNotOptimize(hierarchical_match(t1, t2, matcher, bank));
}
BENCHMARK(BM_HierarchicalMatch)->Arg(512)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
