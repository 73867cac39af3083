#pragma once

#include <cstdint>

namespace erasurekf {

/// SplitMix64 stream. This is the single random source of the library:
/// bit-exact across platforms, so every seeded result is reproducible.
struct SplitMix64 {
    std::uint64_t state = 0;

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) from the top 53 bits.
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

/// Per-trial seed derivation: a splittable counter scheme on
/// (base_seed, index). Trials are independent and order-insensitive, so a
/// parallel run reproduces a serial one exactly.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) {
    SplitMix64 g{base_seed ^ (0x9E3779B97F4A7C15ULL * (index + 1))};
    return g.next();
}

} // namespace erasurekf
