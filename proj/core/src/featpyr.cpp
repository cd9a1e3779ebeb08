#include "regcd/featpyr.hpp"

#include <algorithm>
#include <cmath>

#include "regcd/errors.hpp"

namespace regcd {

namespace {

constexpr int kKernelSize = 11; // covers 3.3 sigma at sigma = 1.5
constexpr double kSigma = 1.5;

// Zero-sum correction: derivative kernels must annihilate constants exactly,
// not just up to truncation error from the finite window.
void subtract_mean(Kernel& k) {
    double sum = 0.0;
    for (double t : k.taps) sum += t;
    const double mean = sum / static_cast<double>(k.taps.size());
    for (double& t : k.taps) t -= mean;
}

Kernel make_kernel(const char* tag, double (*weight)(double, double)) {
    Kernel k;
    k.size = kKernelSize;
    k.tag = tag;
    k.taps.resize(static_cast<std::size_t>(kKernelSize) * kKernelSize);
    const int r = kKernelSize / 2;
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x)
            k.taps[static_cast<std::size_t>(y + r) * kKernelSize + (x + r)] =
                weight(static_cast<double>(x), static_cast<double>(y));
    return k;
}

double gauss2(double x, double y) {
    return std::exp(-(x * x + y * y) / (2.0 * kSigma * kSigma));
}

// Downsample one octave: 2x2 box average (clamped at the right/bottom edge),
// output dims are ceil(input / 2).
FloatImage downsample2(const FloatImage& in) {
    FloatImage out((in.width + 1) / 2, (in.height + 1) / 2);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const int x0 = 2 * x, y0 = 2 * y;
            const int x1 = std::min(x0 + 1, in.width - 1);
            const int y1 = std::min(y0 + 1, in.height - 1);
            out.at(x, y) = 0.25f * (in.at(x0, y0) + in.at(x1, y0) +
                                    in.at(x0, y1) + in.at(x1, y1));
        }
    }
    return out;
}

// Cross-correlation with replicate borders; response(x,y) = sum over taps of
// k(dx+r, dy+r) * in(clamp(x+dx), clamp(y+dy)).
void correlate(const FloatImage& in, const Kernel& k, FeatureMap& out, int channel) {
    const int r = k.size / 2;
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            double acc = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                const int sy = std::clamp(y + dy, 0, in.height - 1);
                for (int dx = -r; dx <= r; ++dx) {
                    const int sx = std::clamp(x + dx, 0, in.width - 1);
                    acc += k.at(dx + r, dy + r) * in.at(sx, sy);
                }
            }
            out.at(x, y, channel) = static_cast<float>(acc);
        }
    }
}

FeatureMap respond(const FloatImage& level, const FilterBank& bank, int scale) {
    FeatureMap fm(level.width, level.height,
                  static_cast<int>(bank.kernels.size()), scale);
    for (std::size_t c = 0; c < bank.kernels.size(); ++c)
        correlate(level, bank.kernels[c], fm, static_cast<int>(c));
    return fm;
}

} // namespace

FilterBank default_filter_bank() {
    FilterBank bank;
    bank.kernels.push_back(make_kernel(
        "dx", [](double x, double y) { return -x / (kSigma * kSigma) * gauss2(x, y); }));
    bank.kernels.push_back(make_kernel(
        "dy", [](double x, double y) { return -y / (kSigma * kSigma) * gauss2(x, y); }));
    bank.kernels.push_back(make_kernel("dxx", [](double x, double y) {
        const double s2 = kSigma * kSigma;
        return (x * x / (s2 * s2) - 1.0 / s2) * gauss2(x, y);
    }));
    bank.kernels.push_back(make_kernel("dyy", [](double x, double y) {
        const double s2 = kSigma * kSigma;
        return (y * y / (s2 * s2) - 1.0 / s2) * gauss2(x, y);
    }));
    for (Kernel& k : bank.kernels) subtract_mean(k);

    Kernel smooth = make_kernel("gauss", gauss2);
    double sum = 0.0;
    for (double t : smooth.taps) sum += t;
    for (double& t : smooth.taps) t /= sum;
    bank.kernels.push_back(std::move(smooth));
    return bank;
}

FeaturePyramid build_pyramid(const Raster& img, const FilterBank& bank) {
    if (bank.kernels.empty()) throw ConfigError("filter bank has no kernels");
    const Raster gray = to_gray(img);
    FloatImage full(gray.width, gray.height);
    for (int y = 0; y < gray.height; ++y)
        for (int x = 0; x < gray.width; ++x)
            full.at(x, y) = static_cast<float>(gray.at(x, y));

    const FloatImage half = downsample2(full);
    const FloatImage quarter = downsample2(half);
    return {respond(half, bank, 2), respond(quarter, bank, 4)};
}

Raster fuse_layerwise(const FeatureMap& fm) {
    FloatImage sums(fm.width, fm.height);
    for (int y = 0; y < fm.height; ++y) {
        for (int x = 0; x < fm.width; ++x) {
            double acc = 0.0;
            for (int c = 0; c < fm.channels; ++c) {
                const float v = fm.at(x, y, c);
                if (!std::isfinite(v)) throw NumericError("feature map sample is not finite");
                acc += v;
            }
            sums.at(x, y) = static_cast<float>(acc);
        }
    }
    float lo = sums.data[0], hi = sums.data[0];
    for (float v : sums.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Raster out(fm.width, fm.height, 1);
    if (hi > lo) {
        const double span = static_cast<double>(hi) - lo;
        for (std::size_t i = 0; i < sums.data.size(); ++i)
            out.data[i] = static_cast<std::uint8_t>(
                std::lround((sums.data[i] - lo) / span * 255.0));
    }
    return out;
}

} // namespace regcd
