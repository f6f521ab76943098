#include "bluq/distributions.hpp"

#include <cmath>
#include <string>

#include "bluq/errors.hpp"

namespace bluq {

namespace {

constexpr long kMaxRejections = 1'000'000;

void check_tn(const TruncatedNormal& t, std::string& errs, const char* tag) {
    auto add = [&errs](const std::string& e) {
        if (!errs.empty()) errs += "; ";
        errs += e;
    };
    if (!(t.low < t.up)) add(std::string(tag) + ": low must be < up");
    if (!(t.sigma > 0.0)) add(std::string(tag) + ": sigma must be > 0");
}

double sample_tn(const TruncatedNormal& t, Rng& rng) {
    for (long i = 0; i < kMaxRejections; ++i) {
        const double x = t.mu + t.sigma * rng.normal();
        if (x >= t.low && x <= t.up) return x;
    }
    throw NumericalError("sample_scalar: rejection cap reached for TruncatedNormal(mu=" +
                         std::to_string(t.mu) + ", sigma=" + std::to_string(t.sigma) + ")");
}

} // namespace

void validate(const DistributionSpec& d) {
    std::string errs;
    auto add = [&errs](const std::string& e) {
        if (!errs.empty()) errs += "; ";
        errs += e;
    };
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, TruncatedNormal>) {
                check_tn(v, errs, "TruncatedNormal");
            } else if constexpr (std::is_same_v<T, UniformDist>) {
                if (!(v.low < v.up)) add("Uniform: low must be < up");
            } else {
                if (!(v.weights[0] >= 0.0 && v.weights[1] >= 0.0))
                    add("BimodalMixture: weights must be >= 0");
                if (std::abs(v.weights[0] + v.weights[1] - 1.0) > 1e-12)
                    add("BimodalMixture: weights must sum to 1");
                check_tn(v.components[0], errs, "BimodalMixture[0]");
                check_tn(v.components[1], errs, "BimodalMixture[1]");
            }
        },
        d);
    if (!errs.empty()) throw ValidationError("DistributionSpec: " + errs);
}

double sample_scalar(const DistributionSpec& d, Rng& rng) {
    validate(d);
    return std::visit(
        [&rng](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, TruncatedNormal>) {
                return sample_tn(v, rng);
            } else if constexpr (std::is_same_v<T, UniformDist>) {
                return rng.uniform(v.low, v.up);
            } else {
                const int pick = rng.uniform01() < v.weights[0] ? 0 : 1;
                return sample_tn(v.components[pick], rng);
            }
        },
        d);
}

} // namespace bluq
