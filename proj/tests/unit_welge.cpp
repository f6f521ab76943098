#include <cmath>

#include "bluq/errors.hpp"
#include "bluq/welge.hpp"
#include "doctest.h"

using namespace bluq;

namespace {

const FluidParams kTrivial{0.0, 0.0, 1.0, 1.0, 0.0};
const FluidParams kResidual{0.1, 0.05, 2.0, 1.0, 0.15};

// Independent oracle: the tangent point maximizes the chord slope from
// (s_init, f(s_init)). Dense scan over a million-point saturation grid.
struct TangentScan {
    double s_bl, sigma;
};
TangentScan scan_tangent(const FluidParams& p, long n = 1'000'000) {
    const double f0 = fractional_flow(p.s_init, p);
    double best_slope = -1.0, best_s = p.s_inj;
    for (long i = 1; i <= n; ++i) {
        const double s = p.s_init + (p.s_inj - p.s_init) * static_cast<double>(i) / n;
        const double slope = (fractional_flow(s, p) - f0) / (s - p.s_init);
        if (slope > best_slope) {
            best_slope = slope;
            best_s = s;
        }
    }
    return {best_s, best_slope};
}

} // namespace

TEST_CASE("tangent point for the symmetric flux") {
    const HullModel h = welge_hull(kTrivial);
    CHECK(h.s_bl == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
    CHECK(h.sigma == doctest::Approx(1.2071067811865475).epsilon(1e-9));
    const TangentScan scan = scan_tangent(kTrivial);
    CHECK(std::abs(h.s_bl - scan.s_bl) < 1e-5);
    CHECK(std::abs(h.sigma - scan.sigma) < 1e-5);
}

TEST_CASE("tangent point with residual saturations matches the dense scan") {
    const HullModel h = welge_hull(kResidual);
    const TangentScan scan = scan_tangent(kResidual);
    CHECK(std::abs(h.s_bl - scan.s_bl) < 1e-5);
    CHECK(std::abs(h.sigma - scan.sigma) < 1e-5);
    CHECK(h.s_bl > kResidual.s_init);
    CHECK(h.s_bl < kResidual.s_inj);
    CHECK(h.sigma > 0.0);
}

TEST_CASE("linear test flux: hull equals the flux and s_bl hits s_inj") {
    auto f = [](double s) { return s; };
    auto fp = [](double) { return 1.0; };
    const HullModel h = concave_hull(f, fp, 0.0, 1.0);
    CHECK(h.s_bl == doctest::Approx(1.0));
    CHECK(h.sigma == doctest::Approx(1.0));
    CHECK(h.f_bl == doctest::Approx(1.0));
}

TEST_CASE("flux concave from s_init admits no tangent") {
    auto f = [](double s) { return std::sqrt(s + 1e-3); };
    auto fp = [](double s) { return 0.5 / std::sqrt(s + 1e-3); };
    CHECK_THROWS_AS(concave_hull(f, fp, 0.0, 1.0), NumericalError);
}

TEST_CASE("tangency condition holds to 1e-8") {
    for (const FluidParams& p : {kTrivial, kResidual}) {
        const HullModel h = welge_hull(p);
        CHECK(std::abs(fractional_flow_derivative(h.s_bl, p) - h.sigma) <= 1e-8);
    }
}

TEST_CASE("hull evaluation branches") {
    const HullModel h = welge_hull(kTrivial);
    const HullEval at_init = hull_eval(h, kTrivial, kTrivial.s_init);
    CHECK(at_init.flux == doctest::Approx(fractional_flow(kTrivial.s_init, kTrivial)));
    CHECK(at_init.slope == doctest::Approx(h.sigma));

    // both branches agree at the tangency point
    const double chord = h.f_init + h.sigma * (h.s_bl - h.s_init);
    CHECK(std::abs(chord - fractional_flow(h.s_bl, kTrivial)) <= 1e-8);
    const HullEval at_bl = hull_eval(h, kTrivial, h.s_bl);
    CHECK(std::abs(at_bl.flux - h.f_bl) <= 1e-8);
    CHECK(std::abs(at_bl.slope - fractional_flow_derivative(h.s_bl, kTrivial)) <= 1e-8);

    const HullEval at_inj = hull_eval(h, kTrivial, kTrivial.s_inj);
    CHECK(at_inj.flux == doctest::Approx(fractional_flow(kTrivial.s_inj, kTrivial)));
    CHECK(at_inj.slope ==
          doctest::Approx(fractional_flow_derivative(kTrivial.s_inj, kTrivial)));
}

TEST_CASE("envelope dominates the flux on the chord with equality at the ends") {
    for (const FluidParams& p : {kTrivial, kResidual}) {
        const HullModel h = welge_hull(p);
        for (int i = 0; i <= 1000; ++i) {
            const double s = p.s_init + (h.s_bl - p.s_init) * i / 1000.0;
            const double gap = hull_eval(h, p, s).flux - fractional_flow(s, p);
            CHECK(gap >= -1e-12);
        }
        CHECK(std::abs(hull_eval(h, p, p.s_init).flux - fractional_flow(p.s_init, p)) <= 1e-10);
        CHECK(std::abs(hull_eval(h, p, h.s_bl).flux - fractional_flow(h.s_bl, p)) <= 1e-8);
    }
}

TEST_CASE("envelope slope is non-increasing across the domain") {
    for (const FluidParams& p : {kTrivial, kResidual}) {
        const HullModel h = welge_hull(p);
        double prev = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 2000; ++i) {
            const double s = p.s_init + (p.s_inj - p.s_init) * i / 2000.0;
            const double slope = hull_eval(h, p, s).slope;
            CHECK(slope <= prev + 1e-10);
            prev = slope;
        }
    }
}

TEST_CASE("clamped evaluation outside the interval") {
    const HullModel h = welge_hull(kResidual);
    const HullEval below = hull_eval(h, kResidual, kResidual.s_init - 0.5);
    CHECK(below.flux == doctest::Approx(h.f_init));
    CHECK(below.slope == doctest::Approx(h.sigma));
    const HullEval above = hull_eval(h, kResidual, 2.0);
    CHECK(above.flux == doctest::Approx(h.f_inj));
}
