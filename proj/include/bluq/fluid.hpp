#pragma once

namespace bluq {

/// Two-phase displacement parameters. Saturations are fractions of pore
/// volume; M is the end-point mobility ratio of the displacing phase over
/// the displaced one.
struct FluidParams {
    double s_wc = 0.0;   ///< wetting residual saturation, in [0,1)
    double s_nr = 0.0;   ///< non-wetting residual saturation, in [0,1)
    double m = 1.0;      ///< end-point mobility ratio, > 0
    double s_inj = 1.0;  ///< injected saturation at the inlet
    double s_init = 0.0; ///< initial saturation in the domain

    /// Throws ValidationError listing every violated constraint.
    void validate() const;

    double mobile_low() const { return s_wc; }
    double mobile_high() const { return 1.0 - s_nr; }
};

/// Fractional flow with quadratic (Corey-type) relative permeabilities:
///
///                 (S - Swc)^2
///   f(S) = --------------------------------
///          (S - Swc)^2 + (1 - S - Snr)^2 / M
///
/// S is clamped to [Swc, 1-Snr] before evaluation so that out-of-range
/// surrogate outputs still produce finite values.
double fractional_flow(double s, const FluidParams& p);

/// df/dS, >= 0 on the mobile range, 0 outside it (clamped region).
double fractional_flow_derivative(double s, const FluidParams& p);

/// d2f/dS2 of the clamped flux.
double fractional_flow_second_derivative(double s, const FluidParams& p);

/// d3f/dS3 of the clamped flux.
double fractional_flow_third_derivative(double s, const FluidParams& p);

} // namespace bluq
