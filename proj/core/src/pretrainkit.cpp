#include "regcd/pretrainkit.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

#include <nlohmann/json.hpp>

#include "regcd/errors.hpp"
#include "regcd/image_io.hpp"
#include "regcd/process.hpp"
#include "regcd/rng.hpp"

namespace regcd {

namespace {

using json = nlohmann::json;

void check_embedding_dims(const EmbeddingVector& x, const EmbeddingVector& y,
                          const ClusterCenter& center) {
    if (x.size() != y.size() || x.size() != center.values.size())
        throw ContractError("embedding dimensions disagree: " + std::to_string(x.size()) +
                            ", " + std::to_string(y.size()) + ", center " +
                            std::to_string(center.values.size()));
    if (x.empty()) throw ContractError("embeddings must be non-empty");
}

// log-softmax of v/tau with max subtraction; exact up to rounding for any
// finite input magnitude.
std::vector<double> log_softmax_scaled(const EmbeddingVector& v, double tau) {
    std::vector<double> scaled(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) scaled[i] = v[i] / tau;
    const double peak = *std::max_element(scaled.begin(), scaled.end());
    double sum = 0.0;
    for (double s : scaled) sum += std::exp(s - peak);
    const double log_sum = std::log(sum);
    for (double& s : scaled) s = s - peak - log_sum;
    return scaled;
}

} // namespace

InstanceMask::InstanceMask(Raster mask) : mask_(std::move(mask)) {
    if (mask_.channels != 1)
        throw ContractError("instance mask must be 1-channel, got " +
                            std::to_string(mask_.channels));
    for (std::uint8_t v : mask_.data) {
        if (v == 255)
            ++on_count_;
        else if (v != 0)
            throw ContractError("instance mask must be 0/255, found value " +
                                std::to_string(v));
    }
    pixel_portion_ = static_cast<double>(on_count_) /
                     (static_cast<double>(mask_.width) * mask_.height);
}

std::vector<InstanceMask> filter_masks(const std::vector<InstanceMask>& masks) {
    std::vector<InstanceMask> kept;
    for (const InstanceMask& m : masks)
        if (m.pixel_portion() >= 0.10 && m.pixel_portion() <= 0.50) kept.push_back(m);
    return kept;
}

Raster extract_instance(const Raster& img, const InstanceMask& mask) {
    if (mask.mask().width != img.width || mask.mask().height != img.height)
        throw ContractError("mask dimensions " + std::to_string(mask.mask().width) + "x" +
                            std::to_string(mask.mask().height) + " do not match image " +
                            std::to_string(img.width) + "x" + std::to_string(img.height));
    Raster out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (mask.mask().at(x, y) == 255)
                for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(x, y, c);
    return out;
}

AugmentParams draw_augment_params(std::uint64_t seed) {
    SplitMix64 rng(seed);
    // Five draws in a fixed order keep the stream layout stable even when a
    // draw's outcome is unused (no rotation).
    const bool rotate = rng.uniform01() < 0.5;
    const bool quarter = rng.uniform01() < 0.5;
    AugmentParams params;
    params.rotation_deg = rotate ? (quarter ? 90 : 180) : 0;
    params.brightness = rng.uniform(0.8, 1.2);
    params.contrast = rng.uniform(0.8, 1.2);
    params.saturation = rng.uniform(0.8, 1.2);
    return params;
}

Raster apply_augment(const Raster& img, const AugmentParams& params) {
    Raster out = img;
    if (params.rotation_deg == 90)
        out = rotate90_ccw(out);
    else if (params.rotation_deg == 180)
        out = rotate180(out);
    else if (params.rotation_deg != 0)
        throw ContractError("rotation must be 0, 90 or 180 degrees, got " +
                            std::to_string(params.rotation_deg));

    const bool jitter_b = params.brightness != 1.0;
    const bool jitter_c = params.contrast != 1.0;
    const bool jitter_s = params.saturation != 1.0 && out.channels == 3;
    if (!jitter_b && !jitter_c && !jitter_s) return out;

    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            double v[3];
            for (int c = 0; c < out.channels; ++c) v[c] = out.at(x, y, c);
            if (jitter_b)
                for (int c = 0; c < out.channels; ++c)
                    v[c] = std::clamp(v[c] * params.brightness, 0.0, 255.0);
            if (jitter_c)
                for (int c = 0; c < out.channels; ++c)
                    v[c] = std::clamp((v[c] - 128.0) * params.contrast + 128.0, 0.0, 255.0);
            if (jitter_s) {
                const double gray = 0.299 * v[0] + 0.587 * v[1] + 0.114 * v[2];
                for (int c = 0; c < 3; ++c)
                    v[c] = std::clamp(gray + (v[c] - gray) * params.saturation, 0.0, 255.0);
            }
            for (int c = 0; c < out.channels; ++c)
                out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(v[c]));
        }
    }
    return out;
}

Raster augment_view(const Raster& img, std::uint64_t seed) {
    return apply_augment(img, draw_augment_params(seed));
}

double dino_loss_term(const EmbeddingVector& x, const EmbeddingVector& y,
                      const ClusterCenter& center, double tau) {
    if (tau <= 0.0) throw ContractError("temperature must be positive");
    check_embedding_dims(x, y, center);

    EmbeddingVector centered(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) centered[i] = x[i] - center.values[i];
    const std::vector<double> log_p = log_softmax_scaled(centered, tau);
    const std::vector<double> log_q = log_softmax_scaled(y, tau);

    double loss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) loss -= std::exp(log_p[i]) * log_q[i];
    return loss;
}

double symmetric_pretrain_loss(const EmbeddingVector& pt1, const EmbeddingVector& pt2,
                               const EmbeddingVector& ps1, const EmbeddingVector& ps2,
                               const ClusterCenter& center, double tau) {
    return 0.5 * dino_loss_term(pt1, ps2, center, tau) +
           0.5 * dino_loss_term(pt2, ps1, center, tau);
}

ClusterCenter update_center(const ClusterCenter& center,
                            const std::vector<EmbeddingVector>& teacher_outputs) {
    if (teacher_outputs.empty())
        throw ContractError("center update requires at least one teacher output");
    for (const EmbeddingVector& t : teacher_outputs)
        if (t.size() != center.values.size())
            throw ContractError("teacher output dimension " + std::to_string(t.size()) +
                                " does not match center dimension " +
                                std::to_string(center.values.size()));

    ClusterCenter next(center.values.size(), center.momentum);
    for (std::size_t i = 0; i < center.values.size(); ++i) {
        double sum = 0.0;
        for (const EmbeddingVector& t : teacher_outputs) sum += t[i];
        next.values[i] = center.momentum * center.values[i] + (1.0 - center.momentum) * sum;
    }
    return next;
}

std::vector<InstanceMask> BuiltinSegmenter::propose(const Raster& img) const {
    constexpr int kWindowRadius = 15; // 31 px adaptive-mean window
    constexpr int kOffset = 5;
    const Raster gray = to_gray(img);
    const int w = gray.width, h = gray.height;

    // Integral image for O(1) windowed means.
    std::vector<double> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
    for (int y = 0; y < h; ++y) {
        double row = 0.0;
        for (int x = 0; x < w; ++x) {
            row += gray.at(x, y);
            integral[static_cast<std::size_t>(y + 1) * (w + 1) + (x + 1)] =
                integral[static_cast<std::size_t>(y) * (w + 1) + (x + 1)] + row;
        }
    }
    auto window_mean = [&](int x, int y) {
        const int x0 = std::max(x - kWindowRadius, 0);
        const int y0 = std::max(y - kWindowRadius, 0);
        const int x1 = std::min(x + kWindowRadius, w - 1) + 1;
        const int y1 = std::min(y + kWindowRadius, h - 1) + 1;
        const double sum = integral[static_cast<std::size_t>(y1) * (w + 1) + x1] -
                           integral[static_cast<std::size_t>(y0) * (w + 1) + x1] -
                           integral[static_cast<std::size_t>(y1) * (w + 1) + x0] +
                           integral[static_cast<std::size_t>(y0) * (w + 1) + x0];
        return sum / ((x1 - x0) * (y1 - y0));
    };

    std::vector<std::uint8_t> fg(static_cast<std::size_t>(w) * h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (gray.at(x, y) > window_mean(x, y) + kOffset)
                fg[static_cast<std::size_t>(y) * w + x] = 1;

    // 4-connected components in scan order, one mask per component.
    std::vector<InstanceMask> masks;
    std::vector<std::int32_t> label(static_cast<std::size_t>(w) * h, -1);
    std::vector<std::pair<int, int>> stack;
    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            const std::size_t seed_idx = static_cast<std::size_t>(y0) * w + x0;
            if (!fg[seed_idx] || label[seed_idx] >= 0) continue;
            Raster mask(w, h, 1);
            stack.clear();
            stack.push_back({x0, y0});
            label[seed_idx] = static_cast<std::int32_t>(masks.size());
            while (!stack.empty()) {
                const auto [x, y] = stack.back();
                stack.pop_back();
                mask.at(x, y) = 255;
                const int nx[4] = {x - 1, x + 1, x, x};
                const int ny[4] = {y, y, y - 1, y + 1};
                for (int k = 0; k < 4; ++k) {
                    if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
                    const std::size_t ni = static_cast<std::size_t>(ny[k]) * w + nx[k];
                    if (fg[ni] && label[ni] < 0) {
                        label[ni] = static_cast<std::int32_t>(masks.size());
                        stack.push_back({nx[k], ny[k]});
                    }
                }
            }
            masks.emplace_back(std::move(mask));
        }
    }
    return masks;
}

std::vector<InstanceMask> SubprocessSegmenter::propose(const Raster& img) const {
    namespace fs = std::filesystem;
    const fs::path dir = make_temp_dir("regcd-segmenter");
    const fs::path img_path = dir / "input.png";
    const fs::path out_path = dir / "masks.json";
    std::vector<InstanceMask> masks;
    try {
        save_png(img, img_path.string());
        const ProcessResult proc =
            run_process({program_, img_path.string(), out_path.string()});
        if (proc.exit_code != 0)
            throw PluginError("segmenter plugin '" + program_ + "' exited with code " +
                              std::to_string(proc.exit_code) + ": " + proc.output);
        std::ifstream in(out_path, std::ios::binary);
        if (!in)
            throw PluginError("segmenter plugin '" + program_ + "' wrote no output file");
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            throw PluginError("segmenter plugin '" + program_ +
                              "' wrote invalid JSON: " + e.what());
        }
        if (!doc.is_object() || !doc.contains("masks") || !doc["masks"].is_array())
            throw PluginError("segmenter plugin '" + program_ +
                              "' output must be {\"masks\": [paths...]}");
        for (const json& rel : doc["masks"]) {
            if (!rel.is_string())
                throw PluginError("segmenter plugin '" + program_ +
                                  "' mask entries must be path strings");
            const fs::path mask_path = out_path.parent_path() / rel.get<std::string>();
            try {
                masks.emplace_back(load_raster(mask_path.string()));
            } catch (const Error& e) {
                throw PluginError("segmenter plugin '" + program_ + "' mask " +
                                  mask_path.string() + " is invalid: " + e.what());
            }
        }
    } catch (...) {
        std::error_code ec;
        fs::remove_all(dir, ec);
        throw;
    }
    std::error_code ec;
    fs::remove_all(dir, ec);
    return masks;
}

std::vector<Raster> generate_instances(const Raster& img, const SegmenterPlugin& segmenter) {
    std::vector<Raster> instances;
    for (const InstanceMask& mask : filter_masks(segmenter.propose(img)))
        instances.push_back(extract_instance(img, mask));
    return instances;
}

} // namespace regcd
