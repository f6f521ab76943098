#pragma once

#include <cstdint>
#include <random>

namespace bluq {

/// SplitMix64 mixing step. Used to derive independent substreams from a
/// master seed: stream i gets splitmix64 state seed + (i+1)*GOLDEN. The
/// generator algorithm (mt19937_64) and all variate mappings below are fully
/// specified, so identical seeds reproduce identical streams on any platform.
std::uint64_t splitmix64(std::uint64_t& state);

/// Seed for the index-th derived substream of `seed`.
std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index);

/// v = sqrt(-2 ln U) * cos(2 pi V), U in (0,1], V in [0,1).
/// Throws std::domain_error for U <= 0.
double box_muller_pair(double u, double v);

/// Deterministic, portable random source. Distribution mappings are written
/// out explicitly rather than using std::*_distribution (whose output is
/// implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t raw() { return gen_(); }

    /// Uniform on [0,1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal() { return box_muller_pair(1.0 - uniform01(), uniform01()); }

    /// Independent generator for realization `index`, derived from the seed
    /// this Rng was constructed with (not from its current position).
    Rng substream(std::uint64_t index) const { return Rng(derive_stream(seed_, index)); }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

} // namespace bluq
