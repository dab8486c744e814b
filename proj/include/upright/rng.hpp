#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>

namespace upright {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

/// 64-bit FNV-1a over a byte string, optionally continuing from a prior hash.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

/// Feed a 64-bit value into an FNV-1a hash, little-endian byte order.
inline std::uint64_t fnv1a64_u64(std::uint64_t value, std::uint64_t h) {
    for (int i = 0; i < 8; ++i) {
        h ^= (value >> (8 * i)) & 0xffu;
        h *= kFnvPrime;
    }
    return h;
}

/// Deterministic random source.
///
/// The engine is std::mt19937_64, whose output sequence is pinned by the
/// standard, and every distribution below is built directly from raw engine
/// words; std::uniform_real_distribution and friends are avoided because
/// their output is not reproducible across standard libraries.
///
/// Substreams derive from (seed, name, indices) only, never from parent
/// draw position, so adding draws in one module cannot perturb another.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Independent named substream. Pure in the parent: consumes no draws.
    Rng fork(std::string_view name) const {
        return Rng(fnv1a64(name, fnv1a64_u64(seed_, kFnvOffset)));
    }

    /// Indexed substream for per-item streams (e.g. one per trial).
    Rng fork(std::string_view name, std::uint64_t a, std::uint64_t b = 0,
             std::uint64_t c = 0) const {
        std::uint64_t h = fnv1a64(name, fnv1a64_u64(seed_, kFnvOffset));
        h = fnv1a64_u64(a, h);
        h = fnv1a64_u64(b, h);
        h = fnv1a64_u64(c, h);
        return Rng(h);
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller. Always consumes exactly two draws.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1 > 1e-300 ? u1 : 1e-300));
        return r * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace upright
