#pragma once

#include <array>
#include <variant>

#include "bluq/rng.hpp"

namespace bluq {

struct TruncatedNormal {
    double mu = 0.0;
    double sigma = 1.0;
    double low = -1.0;
    double up = 1.0;
};

struct UniformDist {
    double low = 0.0;
    double up = 1.0;
};

struct BimodalMixture {
    std::array<double, 2> weights{0.5, 0.5};
    std::array<TruncatedNormal, 2> components;
};

using DistributionSpec = std::variant<TruncatedNormal, UniformDist, BimodalMixture>;

/// Throws ValidationError listing every violated constraint.
void validate(const DistributionSpec& d);

/// One draw. Truncation is by rejection; more than 10^6 rejected draws for a
/// single sample raises NumericalError.
double sample_scalar(const DistributionSpec& d, Rng& rng);

} // namespace bluq
