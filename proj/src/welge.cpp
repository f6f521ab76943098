#include "bluq/welge.hpp"

#include <algorithm>
#include <cmath>

#include "bluq/errors.hpp"

namespace bluq {

namespace {

// Tangency indicator g(s) = f'(s)(s - s_init) - (f(s) - f(s_init)).
// For an S-shaped flux g is positive in the convex region near s_init and
// negative once the chord overtakes the tangent, so bisection applies.
double tangency_gap(const std::function<double(double)>& f,
                    const std::function<double(double)>& fp,
                    double s_init, double f_init, double s) {
    return fp(s) * (s - s_init) - (f(s) - f_init);
}

} // namespace

HullModel concave_hull(const std::function<double(double)>& f,
                       const std::function<double(double)>& fp,
                       double s_init, double s_inj) {
    constexpr double kBracketOffset = 1e-6;
    constexpr double kTol = 1e-10;

    const double f_init = f(s_init);
    const double f_inj = f(s_inj);

    double lo = s_init + kBracketOffset;
    double hi = s_inj;
    const double g_lo = tangency_gap(f, fp, s_init, f_init, lo);
    const double g_hi = tangency_gap(f, fp, s_init, f_init, hi);

    HullModel h;
    h.s_init = s_init;
    h.s_inj = s_inj;
    h.f_init = f_init;
    h.f_inj = f_inj;

    if (g_hi >= -kTol) {
        // no interior tangency; envelope is the chord over the whole interval
        // (covers linear and convex fluxes)
        h.s_bl = s_inj;
        h.f_bl = f_inj;
        h.sigma = (f_inj - f_init) / (s_inj - s_init);
        return h;
    }
    if (g_lo <= 0.0) {
        throw NumericalError(
            "concave_hull: no tangency on the interval (flux concave from s_init; "
            "no shock forms for this configuration)");
    }

    while (hi - lo > kTol) {
        const double mid = 0.5 * (lo + hi);
        if (tangency_gap(f, fp, s_init, f_init, mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    h.s_bl = 0.5 * (lo + hi);
    h.f_bl = f(h.s_bl);
    h.sigma = (h.f_bl - f_init) / (h.s_bl - s_init);
    return h;
}

HullModel welge_hull(const FluidParams& p) {
    p.validate();
    auto f = [&p](double s) { return fractional_flow(s, p); };
    auto fp = [&p](double s) { return fractional_flow_derivative(s, p); };
    return concave_hull(f, fp, p.s_init, p.s_inj);
}

HullEval hull_eval(const HullModel& h, const FluidParams& p, double s) {
    s = std::clamp(s, h.s_init, h.s_inj);
    if (s <= h.s_bl)
        return {h.f_init + h.sigma * (s - h.s_init), h.sigma};
    return {fractional_flow(s, p), fractional_flow_derivative(s, p)};
}

double hull_second_derivative(const HullModel& h, const FluidParams& p, double s) {
    if (s <= h.s_bl || s > h.s_inj) return 0.0;
    return fractional_flow_second_derivative(s, p);
}

double hull_third_derivative(const HullModel& h, const FluidParams& p, double s) {
    if (s <= h.s_bl || s > h.s_inj) return 0.0;
    return fractional_flow_third_derivative(s, p);
}

} // namespace bluq
