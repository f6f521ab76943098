#pragma once

#include <span>
#include <vector>

#include "bluq/fluid.hpp"
#include "bluq/welge.hpp"

namespace bluq {

struct SaturationProfile {
    std::vector<double> x; ///< strictly ascending positions
    std::vector<double> s; ///< saturations, same length as x
    double t = 0.0;
};

/// Analytic similarity solution of the homogeneous Riemann problem:
/// injection plateau, rarefaction fan obtained by inverting the hull slope,
/// and a shock travelling at sigma * v_d.
class MocSolver {
public:
    explicit MocSolver(const FluidParams& p);

    const HullModel& hull() const { return hull_; }
    const FluidParams& fluid() const { return p_; }

    double saturation(double v_d, double x, double t) const;
    double front_radius(double v_d, double t) const;
    double breakthrough(double v_d, double x) const;
    SaturationProfile profile(double v_d, std::span<const double> x, double t) const;

private:
    FluidParams p_;
    HullModel hull_;
    double fan_head_slope_; // hull slope at s_inj (slowest characteristic)
};

// Single-shot conveniences; construct the hull on each call.
double moc_saturation(const FluidParams& p, double v_d, double x, double t);
double moc_front_radius(const FluidParams& p, double v_d, double t);
double moc_breakthrough(const FluidParams& p, double v_d, double x);

} // namespace bluq
