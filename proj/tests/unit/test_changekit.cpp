#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "regcd/changekit.hpp"
#include "regcd/errors.hpp"
#include "regcd/evalbench.hpp"
#include "regcd/pretrainkit.hpp"
#include "regcd/raster.hpp"
#include "regcd/rng.hpp"

#include "scenegen.hpp"

using namespace regcd;
using doctest::Contains;

namespace {

Raster random_tile(std::uint64_t seed, int w, int h, int channels = 1) {
    Raster r(w, h, channels);
    SplitMix64 rng(seed);
    for (auto& v : r.data) v = static_cast<std::uint8_t>(rng.below(256));
    return r;
}

// Reference scorer, written straight from the documented recipe: grayscale,
// per-tile standardization, |difference|, Gaussian blur (sigma 2, separable,
// replicate borders), affine squash of [0.6, 3.0] onto [0, 1], guide gate.
// Everything is kept in double; the library quantizes intermediates to float,
// so agreement is checked to 1e-4 rather than bit-exactly.
std::vector<double> reference_score(const Raster& tile1, const Raster& tile2,
                                    const Raster& guide1, const Raster& guide2) {
    const int w = tile1.width;
    const int h = tile1.height;
    auto standardized = [&](const Raster& tile) {
        const Raster gray = to_gray(tile);
        const auto n = static_cast<double>(gray.data.size());
        double mean = 0.0;
        for (std::uint8_t v : gray.data) mean += v;
        mean /= n;
        double var = 0.0;
        for (std::uint8_t v : gray.data) var += (v - mean) * (v - mean);
        const double sd = std::sqrt(var / n);
        std::vector<double> out(gray.data.size(), 0.0);
        if (sd > 1e-9)
            for (std::size_t i = 0; i < gray.data.size(); ++i)
                out[i] = (gray.data[i] - mean) / sd;
        return out;
    };

    const std::vector<double> n1 = standardized(tile1);
    const std::vector<double> n2 = standardized(tile2);
    std::vector<double> diff(n1.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = std::abs(n1[i] - n2[i]);

    const double sigma = 2.0;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    double tap_sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        taps[static_cast<std::size_t>(i + radius)] =
            std::exp(-(i * i) / (2.0 * sigma * sigma));
        tap_sum += taps[static_cast<std::size_t>(i + radius)];
    }
    for (double& t : taps) t /= tap_sum;

    std::vector<double> horiz(diff.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += taps[static_cast<std::size_t>(i + radius)] *
                       diff[static_cast<std::size_t>(y) * w + std::clamp(x + i, 0, w - 1)];
            horiz[static_cast<std::size_t>(y) * w + x] = acc;
        }
    std::vector<double> smooth(diff.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += taps[static_cast<std::size_t>(i + radius)] *
                       horiz[static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x];
            smooth[static_cast<std::size_t>(y) * w + x] = acc;
        }

    std::vector<double> out(diff.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double s = std::clamp((smooth[i] - 0.6) / 2.4, 0.0, 1.0);
        const double g = std::max(guide1.data[i], guide2.data[i]) / 255.0;
        out[i] = s * (0.3 + 0.7 * g);
    }
    return out;
}

// Scorer stubs for exercising detect_changes plumbing.

class ConstantScorer : public ClassifierPlugin {
public:
    explicit ConstantScorer(float value, bool safe = true) : value_(value), safe_(safe) {}
    FloatImage score(const Raster& t1, const Raster&, const Raster&,
                     const Raster&) const override {
        FloatImage out(t1.width, t1.height);
        std::fill(out.data.begin(), out.data.end(), value_);
        return out;
    }
    bool thread_safe() const override { return safe_; }

private:
    float value_;
    bool safe_;
};

class WrongShapeScorer : public ClassifierPlugin {
public:
    FloatImage score(const Raster& t1, const Raster&, const Raster&,
                     const Raster&) const override {
        return FloatImage(t1.width + 1, t1.height);
    }
};

// Encodes the tile-local coordinate so stitching back into the full frame can
// be checked pixel for pixel.
class LocalCoordScorer : public ClassifierPlugin {
public:
    FloatImage score(const Raster& t1, const Raster&, const Raster&,
                     const Raster&) const override {
        FloatImage out(t1.width, t1.height);
        for (int y = 0; y < t1.height; ++y)
            for (int x = 0; x < t1.width; ++x)
                out.at(x, y) = static_cast<float>((x + 100 * y) / 100000.0);
        return out;
    }
};

// Tracks how many score() calls overlap in time.
class ConcurrencyProbe : public ClassifierPlugin {
public:
    explicit ConcurrencyProbe(bool safe) : safe_(safe) {}
    FloatImage score(const Raster& t1, const Raster&, const Raster&,
                     const Raster&) const override {
        const int now = ++active_;
        int seen = peak_.load();
        while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        --active_;
        return FloatImage(t1.width, t1.height);
    }
    bool thread_safe() const override { return safe_; }
    int peak() const { return peak_.load(); }

private:
    bool safe_;
    mutable std::atomic<int> active_{0};
    mutable std::atomic<int> peak_{0};
};

class EmptySegmenter : public SegmenterPlugin {
public:
    std::vector<InstanceMask> propose(const Raster&) const override { return {}; }
};

Raster full_validity(int w, int h) {
    Raster v(w, h, 1);
    std::fill(v.data.begin(), v.data.end(), std::uint8_t{255});
    return v;
}

} // namespace

TEST_CASE("baseline_score matches an independent implementation of its recipe") {
    const Raster t1 = random_tile(401, 23, 17);
    Raster t2 = t1;
    // Perturb a block so the difference image has structure.
    for (int y = 4; y < 12; ++y)
        for (int x = 6; x < 15; ++x)
            t2.at(x, y) = static_cast<std::uint8_t>(255 - t2.at(x, y));

    Raster g1(23, 17, 1);
    Raster g2(23, 17, 1);
    for (int y = 0; y < 17; ++y)
        for (int x = 0; x < 23; ++x) {
            g1.at(x, y) = x < 12 ? 255 : 0;
            g2.at(x, y) = (x + y) % 3 == 0 ? 255 : 0;
        }

    const FloatImage got = baseline_score(t1, t2, g1, g2);
    const std::vector<double> want = reference_score(t1, t2, g1, g2);
    REQUIRE(got.width == 23);
    REQUIRE(got.height == 17);
    for (std::size_t i = 0; i < want.size(); ++i)
        CHECK(std::abs(got.data[i] - want[i]) < 1e-4);
}

TEST_CASE("baseline_score on RGB tiles goes through the grayscale path") {
    const Raster t1 = random_tile(77, 14, 11, 3);
    Raster t2 = random_tile(78, 14, 11, 3);
    Raster g(14, 11, 1);
    const FloatImage got = baseline_score(t1, t2, g, g);
    const std::vector<double> want = reference_score(t1, t2, g, g);
    for (std::size_t i = 0; i < want.size(); ++i)
        CHECK(std::abs(got.data[i] - want[i]) < 1e-4);
}

TEST_CASE("identical tiles score exactly zero everywhere") {
    const Raster t = random_tile(5, 31, 19);
    Raster guide(31, 19, 1);
    std::fill(guide.data.begin(), guide.data.end(), std::uint8_t{255});
    const FloatImage s = baseline_score(t, t, guide, guide);
    for (float v : s.data) CHECK(v == 0.0f);
}

TEST_CASE("guide gate caps ungated scores at 0.3 and never decreases gated ones") {
    const Raster t1 = random_tile(9001, 24, 24);
    Raster t2(24, 24, 1);
    for (std::size_t i = 0; i < t2.data.size(); ++i)
        t2.data[i] = static_cast<std::uint8_t>(255 - t1.data[i]);

    Raster off(24, 24, 1);
    Raster on(24, 24, 1);
    std::fill(on.data.begin(), on.data.end(), std::uint8_t{255});

    const FloatImage gated = baseline_score(t1, t2, off, off);
    const FloatImage open = baseline_score(t1, t2, on, on);
    float gated_max = 0.0f;
    for (std::size_t i = 0; i < gated.data.size(); ++i) {
        gated_max = std::max(gated_max, gated.data[i]);
        CHECK(open.data[i] >= gated.data[i]);
        CHECK(open.data[i] <= 1.0f);
        CHECK(gated.data[i] >= 0.0f);
    }
    CHECK(gated_max <= 0.3f + 1e-6f);
    CHECK(gated_max > 0.0f); // the inverted tile really does trip the scorer
}

TEST_CASE("baseline_score validates dimensions") {
    const Raster a(8, 8, 1);
    const Raster b(8, 9, 1);
    const Raster g(8, 8, 1);
    CHECK_THROWS_WITH_AS(baseline_score(a, b, g, g), Contains("tile pair"), ContractError);
    CHECK_THROWS_WITH_AS(baseline_score(a, a, b, g), Contains("guide 1"), ContractError);
    CHECK_THROWS_WITH_AS(baseline_score(a, a, g, b), Contains("guide 2"), ContractError);
}

TEST_CASE("detect_changes rejects bad inputs") {
    const Raster img(16, 16, 1);
    const Raster other(16, 17, 1);
    const Raster validity = full_validity(16, 16);
    const ConstantScorer scorer(0.5f);
    const EmptySegmenter seg;

    CHECK_THROWS_AS(detect_changes(img, other, validity, scorer, seg, 32, 0.5),
                    ContractError);
    CHECK_THROWS_AS(detect_changes(img, img, other, scorer, seg, 32, 0.5), ContractError);
    CHECK_THROWS_WITH_AS(detect_changes(img, img, validity, scorer, seg, 32, 0.0),
                         Contains("threshold"), ConfigError);
    CHECK_THROWS_AS(detect_changes(img, img, validity, scorer, seg, 32, 1.0), ConfigError);
    CHECK_THROWS_AS(detect_changes(img, img, validity, scorer, seg, 32, -0.25), ConfigError);
    CHECK_THROWS_WITH_AS(detect_changes(img, img, validity, scorer, seg, 16, 0.5),
                         Contains("tile size"), ConfigError);

    const WrongShapeScorer bad;
    CHECK_THROWS_WITH_AS(detect_changes(img, img, validity, bad, seg, 32, 0.5),
                         Contains("classifier returned"), ContractError);
}

TEST_CASE("detect_changes zeroes probabilities outside the validity mask") {
    const Raster img = random_tile(17, 40, 36);
    Raster validity = full_validity(40, 36);
    for (int y = 0; y < 36; ++y)
        for (int x = 28; x < 40; ++x) validity.at(x, y) = 0;

    const ConstantScorer scorer(0.9f);
    const EmptySegmenter seg;
    const ChangeMap map = detect_changes(img, img, validity, scorer, seg, 32, 0.5);

    REQUIRE(map.probs.width == 40);
    REQUIRE(map.binary.channels == 1);
    CHECK(map.threshold == 0.5);
    for (int y = 0; y < 36; ++y)
        for (int x = 0; x < 40; ++x) {
            if (x >= 28) {
                CHECK(map.probs.at(x, y) == 0.0f);
                CHECK(map.binary.at(x, y) == 0);
            } else {
                CHECK(map.probs.at(x, y) == 0.9f);
                CHECK(map.binary.at(x, y) == 255);
            }
        }
}

TEST_CASE("binarization includes scores exactly at the threshold") {
    const Raster img = random_tile(3, 32, 32);
    const Raster validity = full_validity(32, 32);
    const ConstantScorer at_threshold(0.5f);
    const EmptySegmenter seg;
    const ChangeMap map = detect_changes(img, img, validity, at_threshold, seg, 32, 0.5);
    for (std::uint8_t v : map.binary.data) CHECK(v == 255);

    const ConstantScorer below(0.49f);
    const ChangeMap map2 = detect_changes(img, img, validity, below, seg, 32, 0.5);
    for (std::uint8_t v : map2.binary.data) CHECK(v == 0);
}

TEST_CASE("tile scores land at their tile's origin in the stitched map") {
    const Raster img = random_tile(23, 70, 40); // 3x2 tile grid with clipped edges
    const Raster validity = full_validity(70, 40);
    const LocalCoordScorer scorer;
    const EmptySegmenter seg;
    const ChangeMap map = detect_changes(img, img, validity, scorer, seg, 32, 0.5);

    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 70; ++x) {
            const int lx = x % 32;
            const int ly = y % 32;
            const float want = static_cast<float>((lx + 100 * ly) / 100000.0);
            CHECK(map.probs.at(x, y) == want);
        }
}

TEST_CASE("worker count does not change the result") {
    const Raster t1 = testgen::make_scene(91, 96);
    Raster t2 = t1;
    for (int y = 30; y < 58; ++y)
        for (int x = 40; x < 70; ++x) t2.at(x, y) = 250;
    const Raster validity = full_validity(96, 96);

    const BaselineClassifier scorer;
    const BuiltinSegmenter seg;
    const ChangeMap serial = detect_changes(t1, t2, validity, scorer, seg, 32, 0.5, 1);
    const ChangeMap threaded = detect_changes(t1, t2, validity, scorer, seg, 32, 0.5, 4);

    CHECK(serial.probs.data == threaded.probs.data);
    CHECK(serial.binary.data == threaded.binary.data);
}

TEST_CASE("plugins that are not thread safe are never called concurrently") {
    const Raster img = random_tile(55, 128, 128);
    const Raster validity = full_validity(128, 128);
    const EmptySegmenter seg;

    const ConcurrencyProbe serial_probe(false);
    detect_changes(img, img, validity, serial_probe, seg, 32, 0.5, 8);
    CHECK(serial_probe.peak() == 1);

    // Sanity-check the probe itself: a thread-safe plugin with 8 workers and
    // 16 tiles should actually overlap.
    const ConcurrencyProbe parallel_probe(true);
    detect_changes(img, img, validity, parallel_probe, seg, 32, 0.5, 8);
    CHECK(parallel_probe.peak() > 1);
}

TEST_CASE("apply_overlap_mask scales probabilities and binary output") {
    ChangeMap m;
    m.threshold = 0.4;
    m.probs = FloatImage(2, 2);
    m.probs.data = {0.8f, 0.4f, 0.1f, 1.0f};
    m.binary = Raster(2, 2, 1);
    m.binary.data = {255, 255, 0, 255};

    Raster mask(2, 2, 1);
    mask.data = {255, 0, 255, 0};

    const ChangeMap out = apply_overlap_mask(m, mask);
    CHECK(out.threshold == 0.4);
    CHECK(out.probs.data[0] == 0.8f);
    CHECK(out.probs.data[1] == 0.0f);
    CHECK(out.probs.data[2] == 0.1f);
    CHECK(out.probs.data[3] == 0.0f);
    CHECK(out.binary.data == std::vector<std::uint8_t>{255, 0, 0, 0});

    const Raster wrong(3, 2, 1);
    CHECK_THROWS_AS(apply_overlap_mask(m, wrong), ContractError);
}

TEST_CASE("weighted_bce matches a hand-computed value") {
    FloatImage pred(2, 1);
    pred.data = {0.8f, 0.3f};
    Raster target(2, 1, 1);
    target.data = {255, 0};

    // (-2 ln 0.8 - ln 0.7) / 2 with float-quantized predictions.
    const double y0 = static_cast<double>(0.8f);
    const double y1 = static_cast<double>(0.3f);
    const double want = (-2.0 * std::log(y0) - std::log(1.0 - y1)) / 2.0;
    CHECK(std::abs(want - 0.4014810232835759) < 1e-7); // pin against drift
    CHECK(std::abs(weighted_bce(pred, target, 2.0) - want) < 1e-15);
}

TEST_CASE("weighted_bce clamps extreme predictions instead of overflowing") {
    FloatImage pred(2, 1);
    pred.data = {0.0f, 1.0f};
    Raster target(2, 1, 1);
    target.data = {255, 0}; // both terms hit the clamp at 1e-7
    const double loss = weighted_bce(pred, target, 1.0);
    CHECK(std::isfinite(loss));
    const double want = (-std::log(1e-7) - std::log(1e-7)) / 2.0;
    CHECK(std::abs(loss - want) < 1e-9);
}

TEST_CASE("weighted_bce validates its contract") {
    FloatImage pred(2, 1);
    pred.data = {0.5f, 0.5f};
    Raster target(2, 1, 1);
    target.data = {255, 0};
    CHECK_THROWS_WITH_AS(weighted_bce(pred, target, 0.0), Contains("positive"),
                         ContractError);
    CHECK_THROWS_AS(weighted_bce(pred, target, -3.0), ContractError);

    Raster gray(2, 1, 1);
    gray.data = {128, 0};
    CHECK_THROWS_WITH_AS(weighted_bce(pred, gray, 1.0), Contains("0/255"), ContractError);

    Raster wrong(3, 1, 1);
    wrong.data = {0, 0, 0};
    CHECK_THROWS_AS(weighted_bce(pred, wrong, 1.0), ContractError);
}

TEST_CASE("weighted_bce weights the positive class") {
    FloatImage pred(1, 1);
    pred.data = {0.4f};
    Raster pos(1, 1, 1);
    pos.data = {255};
    const double y = static_cast<double>(0.4f);
    CHECK(std::abs(weighted_bce(pred, pos, 3.0) - (-3.0 * std::log(y))) < 1e-12);
    Raster neg(1, 1, 1);
    neg.data = {0};
    CHECK(std::abs(weighted_bce(pred, neg, 3.0) - (-std::log(1.0 - y))) < 1e-12);
}

TEST_CASE("end-to-end change map recovers a synthetic insertion") {
    // Textured background with one bright inserted square; the square should
    // dominate the detection inside the (fully valid) frame.
    Raster t1(160, 160, 1);
    SplitMix64 rng(2026);
    for (int y = 0; y < 160; ++y)
        for (int x = 0; x < 160; ++x)
            t1.at(x, y) = static_cast<std::uint8_t>(70 + rng.below(21));
    // A few stable mid-gray structures so both frames have segments.
    for (int y = 10; y < 40; ++y)
        for (int x = 15; x < 60; ++x) t1.at(x, y) = 150;
    for (int y = 110; y < 150; ++y)
        for (int x = 100; x < 140; ++x) t1.at(x, y) = 165;

    Raster t2 = t1;
    Raster gt(160, 160, 1);
    for (int y = 60; y < 104; ++y)
        for (int x = 50; x < 94; ++x) {
            t2.at(x, y) = 246;
            gt.at(x, y) = 255;
        }

    const BaselineClassifier scorer;
    const BuiltinSegmenter seg;
    const ChangeMap map =
        detect_changes(t1, t2, full_validity(160, 160), scorer, seg, 80, 0.5);

    const ConfusionCounts c = confusion(map.binary, gt);
    const Metrics m = metrics(c);
    CHECK(m.f1 >= 0.6);
    CHECK(c.tp > 1000); // 44x44 square mostly found
}
