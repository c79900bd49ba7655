#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace ihmon {

/// Seeded random source used by every sampler in the library.
///
/// Conversions from raw engine output to doubles and indices are done here
/// rather than through <random> distributions, whose output is
/// implementation-defined. Identical seeds therefore give identical streams
/// on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

    std::uint64_t seed() const { return seed_; }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform index in [0, n). Requires n > 0.
    std::size_t index(std::size_t n) {
        auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Draws an index with probability proportional to `weights`.
    /// Falls back to the last positive entry when rounding leaves mass over.
    std::size_t categorical(std::span<const double> weights);

    /// Independent child generator; advances this generator by one draw.
    Rng split() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL); }

    /// Deterministic child for stream `stream` of this generator's seed;
    /// does not advance the parent.
    Rng fork(std::uint64_t stream) const { return Rng(mix(seed_ + 0x632be59bd9b4e019ULL * (stream + 1))); }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

inline std::size_t Rng::categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    std::size_t last = weights.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        last = i;
        if (u < weights[i]) return i;
        u -= weights[i];
    }
    return last == weights.size() ? 0 : last;
}

} // namespace ihmon
