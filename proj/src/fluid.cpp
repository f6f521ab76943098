#include "bluq/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bluq/errors.hpp"

namespace bluq {

void FluidParams::validate() const {
    std::string errs;
    auto add = [&errs](const std::string& e) {
        if (!errs.empty()) errs += "; ";
        errs += e;
    };
    if (!(s_wc >= 0.0 && s_wc < 1.0)) add("s_wc must be in [0,1)");
    if (!(s_nr >= 0.0 && s_nr < 1.0)) add("s_nr must be in [0,1)");
    if (!(s_wc + s_nr < 1.0)) add("s_wc + s_nr must be < 1");
    if (!(m > 0.0)) add("mobility ratio m must be > 0");
    if (!(s_init < s_inj)) add("s_init must be < s_inj");
    if (!(s_init >= 0.0 && s_init < 1.0)) add("s_init must be in [0,1)");
    if (!(s_inj > 0.0 && s_inj <= 1.0)) add("s_inj must be in (0,1]");
    if (!errs.empty()) throw ValidationError("FluidParams: " + errs);
}

namespace {

inline double clamp_mobile(double s, const FluidParams& p) {
    return std::clamp(s, p.s_wc, 1.0 - p.s_nr);
}

// Numerator/denominator pieces shared by all derivative orders.
// N(S) = (S-Swc)^2, D(S) = N + (1-S-Snr)^2/M; both quadratics.
struct FluxParts {
    double n, np;   // N, N'
    double d, dp;   // D, D'
    double npp = 2.0;
    double dpp;
};

inline FluxParts parts(double s, const FluidParams& p) {
    FluxParts q;
    const double a = s - p.s_wc;
    const double b = 1.0 - s - p.s_nr;
    q.n = a * a;
    q.np = 2.0 * a;
    q.d = a * a + b * b / p.m;
    q.dp = 2.0 * a - 2.0 * b / p.m;
    q.dpp = 2.0 + 2.0 / p.m;
    return q;
}

} // namespace

double fractional_flow(double s, const FluidParams& p) {
    p.validate();
    s = clamp_mobile(s, p);
    const FluxParts q = parts(s, p);
    if (q.d == 0.0) return 0.0; // only when Swc+Snr==1, excluded by validate
    return q.n / q.d;
}

double fractional_flow_derivative(double s, const FluidParams& p) {
    p.validate();
    // outside the mobile range the clamped flux is constant
    if (s < p.s_wc || s > 1.0 - p.s_nr) return 0.0;
    const FluxParts q = parts(s, p);
    const double d2 = q.d * q.d;
    return (q.np * q.d - q.n * q.dp) / d2;
}

double fractional_flow_second_derivative(double s, const FluidParams& p) {
    p.validate();
    if (s < p.s_wc || s > 1.0 - p.s_nr) return 0.0;
    const FluxParts q = parts(clamp_mobile(s, p), p);
    // f' = P/D^2 with P = N'D - ND'; f'' = (P'D - 2PD')/D^3.
    const double cp = q.np * q.d - q.n * q.dp;
    const double cpp = q.npp * q.d - q.n * q.dpp;
    return (cpp * q.d - 2.0 * cp * q.dp) / (q.d * q.d * q.d);
}

double fractional_flow_third_derivative(double s, const FluidParams& p) {
    p.validate();
    if (s < p.s_wc || s > 1.0 - p.s_nr) return 0.0;
    const FluxParts q = parts(clamp_mobile(s, p), p);
    // With P = N'D - ND' and Q = P'D - 2PD' (so f'' = Q/D^3):
    // P'' = N''D' - N'D'' (cubic terms vanish for quadratic N, D)
    // Q'  = P''D - P'D' - 2PD''
    // f''' = (Q'D - 3QD')/D^4.
    const double cp = q.np * q.d - q.n * q.dp;
    const double cpp = q.npp * q.d - q.n * q.dpp;
    const double cppp = q.npp * q.dp - q.np * q.dpp;
    const double qq = cpp * q.d - 2.0 * cp * q.dp;
    const double qqp = cppp * q.d - cpp * q.dp - 2.0 * cp * q.dpp;
    const double d2 = q.d * q.d;
    return (qqp * q.d - 3.0 * qq * q.dp) / (d2 * d2);
}

} // namespace bluq
