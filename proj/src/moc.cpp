#include "bluq/moc.hpp"

#include <cmath>

#include "bluq/errors.hpp"

namespace bluq {

MocSolver::MocSolver(const FluidParams& p) : p_(p), hull_(welge_hull(p)) {
    fan_head_slope_ = hull_eval(hull_, p_, p_.s_inj).slope;
}

double MocSolver::saturation(double v_d, double x, double t) const {
    if (!(v_d > 0.0)) throw ValidationError("moc_saturation: v_d must be > 0");
    if (x == 0.0) return p_.s_inj; // inlet boundary
    if (t <= 0.0) return p_.s_init;

    const double xi = x / (v_d * t);
    if (xi <= fan_head_slope_) return p_.s_inj;
    if (xi > hull_.sigma) return p_.s_init;
    if (xi == hull_.sigma) return hull_.s_bl; // left limit at the shock

    // rarefaction fan: invert f'(s) = xi on [s_bl, s_inj] where f' decreases
    constexpr double kTol = 1e-10;
    double lo = hull_.s_bl, hi = p_.s_inj;
    while (hi - lo > kTol) {
        const double mid = 0.5 * (lo + hi);
        if (fractional_flow_derivative(mid, p_) > xi)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double MocSolver::front_radius(double v_d, double t) const {
    if (!(v_d > 0.0)) throw ValidationError("moc_front_radius: v_d must be > 0");
    return hull_.sigma * v_d * t;
}

double MocSolver::breakthrough(double v_d, double x) const {
    if (!(v_d > 0.0)) throw ValidationError("moc_breakthrough: v_d must be > 0");
    return x / (hull_.sigma * v_d);
}

SaturationProfile MocSolver::profile(double v_d, std::span<const double> x, double t) const {
    SaturationProfile out;
    out.t = t;
    out.x.assign(x.begin(), x.end());
    out.s.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out.s[i] = saturation(v_d, x[i], t);
    return out;
}

double moc_saturation(const FluidParams& p, double v_d, double x, double t) {
    return MocSolver(p).saturation(v_d, x, t);
}

double moc_front_radius(const FluidParams& p, double v_d, double t) {
    return MocSolver(p).front_radius(v_d, t);
}

double moc_breakthrough(const FluidParams& p, double v_d, double x) {
    return MocSolver(p).breakthrough(v_d, x);
}

} // namespace bluq
