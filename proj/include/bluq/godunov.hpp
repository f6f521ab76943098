#pragma once

#include <span>
#include <vector>

#include "bluq/fluid.hpp"

namespace bluq {

struct Grid1D {
    int n_cells = 256;
    double x_max = 1.0;

    void validate() const;
    double dx() const { return x_max / n_cells; }
    double center(int i) const { return (i + 0.5) * dx(); }
    std::vector<double> centers() const;
};

/// Saturation snapshots on cell centers, time-major, plus the conservation
/// accumulators filled in by fvm_solve. At unit total rate 1/v(x) acts as
/// the porosity, so storage is the cell integral of S/v and the boundary
/// accumulators integrate the fractional flux over time.
struct SpaceTimeField {
    std::vector<double> x;
    std::vector<double> t;
    std::vector<std::vector<double>> s; ///< s[ti][xi]

    double inflow = 0.0;
    double outflow = 0.0;
    double storage_initial = 0.0;
    double storage_final = 0.0;
};

struct TimeStepSpec {
    enum class Kind {
        FixedRatio,  ///< dt = dx / value (value defaults to 15)
        CflFraction, ///< dt = value * dx / (max v * max f')
        Explicit     ///< dt = value
    };
    Kind kind = Kind::FixedRatio;
    double value = 15.0;

    static TimeStepSpec fixed_ratio(double den = 15.0) { return {Kind::FixedRatio, den}; }
    static TimeStepSpec cfl_fraction(double c) { return {Kind::CflFraction, c}; }
    static TimeStepSpec explicit_dt(double dt) { return {Kind::Explicit, dt}; }
};

/// Optional pointwise time series recorded during a solve: s(x_loc, t) at
/// the given probe locations, sampled on `times` (each entry is filled with
/// the solution at the first step boundary reaching that time).
struct ProbeRequest {
    std::vector<double> locations;
    std::vector<double> times;
};

struct ProbeSeries {
    std::vector<double> locations;
    std::vector<double> times;
    std::vector<std::vector<double>> s; ///< s[loc][ti]
};

/// Interface flux of the local Riemann problem: min of f over [sl, sr] when
/// sl <= sr, max over [sr, sl] otherwise. For the monotone Corey flux this
/// reduces to upwinding, computed analytically.
double godunov_flux(const FluidParams& p, double s_left, double s_right);

/// First-order explicit conservative solve of
///   dS/dt + v(x) f'(S) dS/dx = 0
/// on [0, x_max] with inflow saturation s_inj and free outflow. `v` holds
/// one positive velocity per cell; the interface flux multiplier is the
/// upwind (left) cell's velocity. Snapshot times are recorded at the first
/// step boundary that reaches them; t_end is always the last snapshot.
/// Throws ValidationError when the requested dt violates the CFL bound.
SpaceTimeField fvm_solve(const FluidParams& p, std::span<const double> v, const Grid1D& g,
                         double t_end, TimeStepSpec dt_rule,
                         std::span<const double> snapshots,
                         const ProbeRequest* probes = nullptr, ProbeSeries* series_out = nullptr);

/// |inflow - outflow - (storage_final - storage_initial)| / inflow from the
/// accumulators of a completed solve. Zero-duration runs report 0.
double mass_balance(const SpaceTimeField& field);

/// Largest characteristic speed factor max_S f'(S) over the mobile range,
/// used in CFL bounds (dense scan, cached per parameter set by callers).
double max_flux_derivative(const FluidParams& p);

} // namespace bluq
