#pragma once

#include <functional>

#include "bluq/fluid.hpp"

namespace bluq {

/// Entropy-constrained (concave-envelope) flux. Below the tangency
/// saturation s_bl the envelope is the chord from (s_init, f(s_init)); above
/// it the raw flux applies. sigma is the chord slope and multiplies the
/// velocity to give the shock speed.
struct HullModel {
    double s_bl = 0.0;
    double f_bl = 0.0;
    double sigma = 0.0;
    // piecewise breakpoints
    double s_init = 0.0;
    double s_inj = 1.0;
    double f_init = 0.0;
    double f_inj = 1.0;
};

struct HullEval {
    double flux;
    double slope;
};

/// Tangent construction for the fractional-flow curve of `p` on
/// [s_init, s_inj]. Throws NumericalError when the flux restricted to that
/// interval admits no tangent point (no shock forms).
HullModel welge_hull(const FluidParams& p);

/// Same construction for an arbitrary flux (used with test fluxes).
/// f and fp are the flux and its derivative. A flux that is already concave
/// over the interval yields s_bl == s_inj and a chord spanning the interval.
HullModel concave_hull(const std::function<double(double)>& f,
                       const std::function<double(double)>& fp,
                       double s_init, double s_inj);

/// Envelope value and slope at s (clamped to [s_init, s_inj]).
HullEval hull_eval(const HullModel& h, const FluidParams& p, double s);

/// Second derivative of the envelope: 0 on the chord, raw f'' above s_bl,
/// 0 outside the clamp range.
double hull_second_derivative(const HullModel& h, const FluidParams& p, double s);

/// Third derivative, same piecewise structure.
double hull_third_derivative(const HullModel& h, const FluidParams& p, double s);

} // namespace bluq
