#include "bluq/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bluq {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t state = seed + (index + 1) * 0x9E3779B97F4A7C15ull;
    splitmix64(state);
    return splitmix64(state);
}

double box_muller_pair(double u, double v) {
    if (!(u > 0.0))
        throw std::domain_error("box_muller_pair: U must be in (0,1], got U=" + std::to_string(u));
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

} // namespace bluq
