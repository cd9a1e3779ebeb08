#include <benchmark/benchmark.h>

#include <algorithm>
#include <cstdint>

#include "regcd/changekit.hpp"
#include "regcd/geomest.hpp"
#include "regcd/geometry.hpp"
#include "regcd/pretrainkit.hpp"
#include "regcd/raster.hpp"
#include "regcd/rng.hpp"

namespace {

using namespace regcd;

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

void BM_BaselineScore(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const Raster t1 = make_image(1, size);
    Raster t2 = t1;
    for (int y = size / 4; y < size / 2; ++y)
        for (int x = size / 4; x < size / 2; ++x) t2.at(x, y) = 240;
    Raster guide(size, size, 1);
    std::fill(guide.data.begin(), guide.data.end(), std::uint8_t{255});
    for (auto _ : state) benchmark::DoNotOptimize(baseline_score(t1, t2, guide, guide));
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_BaselineScore)->Arg(256);

void BM_SegmenterPropose(benchmark::State& state) {
    const Raster img = make_image(2, static_cast<int>(state.range(0)));
    const BuiltinSegmenter seg;
    for (auto _ : state) benchmark::DoNotOptimize(seg.propose(img));
}
BENCHMARK(BM_SegmenterPropose)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_DetectChanges(benchmark::State& state) {
    const int size = 512;
    const Raster t1 = make_image(3, size);
    Raster t2 = t1;
    for (int y = 100; y < 180; ++y)
        for (int x = 220; x < 300; ++x) t2.at(x, y) = 245;
    Raster validity(size, size, 1);
    std::fill(validity.data.begin(), validity.data.end(), std::uint8_t{255});
    const BaselineClassifier classifier;
    const BuiltinSegmenter segmenter;
    const int workers = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(
            detect_changes(t1, t2, validity, classifier, segmenter, 256, 0.5, workers));
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_DetectChanges)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_PolygonMask(benchmark::State& state) {
    const int size = 1024;
    const double c = (size - 1) / 2.0;
    const Homography h = Homography::translation(60.0, -40.0) *
                         Homography::rotation_deg(15.0, c, c);
    const Polygon overlap = overlap_polygon(size, size, size, size, h);
    for (auto _ : state) benchmark::DoNotOptimize(polygon_mask(overlap, size, size));
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_PolygonMask);

} // namespace

BENCHMARK_MAIN();
