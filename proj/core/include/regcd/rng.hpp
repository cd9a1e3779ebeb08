#pragma once

#include <cstdint>

namespace regcd {

/// SplitMix64 generator. Fully specified output sequence, so seeded results
/// are reproducible across platforms and compilers (std distributions are
/// not). Cheap to seed, which makes it suitable for counter-based substreams:
/// substream(seed, i) gives an independent deterministic stream per index.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 mantissa bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n). Modulo bias is below 2^-53 for any n that
    /// fits realistic index ranges and is accepted for reproducibility.
    std::uint64_t below(std::uint64_t n) { return next() % n; }

private:
    std::uint64_t state_;
};

/// Derive the seed of substream `index` from a master seed.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
    SplitMix64 mix(master ^ (0xD1B54A32D192ED03ULL * (index + 1)));
    return mix.next();
}

} // namespace regcd
