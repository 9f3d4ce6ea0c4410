#pragma once

#include <cstdint>

namespace regret {

/**
 * Counter-friendly 64-bit generator (splitmix64).  Streams derived from a
 * (seed, stream) pair are independent of evaluation order, which keeps
 * sampled experiments reproducible regardless of how work is scheduled.
 */
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t s) : state(s) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, bound) via rejection-free scaling (bound small).
    std::uint64_t below(std::uint64_t bound) { return next() % bound; }
};

/// Deterministic stream seed for (seed, stream), e.g. one stream per path.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 g(seed ^ (0xA0761D6478BD642FULL * (stream + 1)));
    g.next();
    return g.next();
}

} // namespace regret
