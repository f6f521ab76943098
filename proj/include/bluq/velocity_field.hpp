#pragma once

#include <span>
#include <variant>
#include <vector>

#include "bluq/distributions.hpp"
#include "bluq/godunov.hpp"
#include "bluq/rng.hpp"

namespace bluq {

// ---- realized velocity fields (parameters already drawn) -------------------

struct ConstantField {
    double v = 1.0;
};
struct AffineField { // theta * x + b
    double theta = 1.0;
    double b = 0.5;
};
struct PeriodicField { // theta * sin(k x) + b
    double theta = 1.0;
    double k = 1.0;
    double b = 0.5;
};
struct FourierSeriesField { // amplitude * sum_k theta_k sin(2 pi k x) + b
    std::vector<double> theta;
    double amplitude = 1.0;
    double b = 1.0;
};
struct TanhStairsField { // descending stairs 2.0 / 1.5 / 1.0 / 0.5
};
struct HighFreqCosineField { // 1.5 + cos(100 x)
};
struct GriddedField { // piecewise constant per cell
    std::vector<double> values;
    double x_max = 1.0;
};

using VelocityFieldSpec = std::variant<ConstantField, AffineField, PeriodicField,
                                       FourierSeriesField, TanhStairsField,
                                       HighFreqCosineField, GriddedField>;

/// Point evaluation of a realized field.
double eval_field(const VelocityFieldSpec& f, double x);

/// True when v(x) > 0 at every point of a 1000-point scan of [0, x_max].
bool field_positive(const VelocityFieldSpec& f, double x_max);

// ---- one realization packaged for solvers and surrogates -------------------

/// A drawn field together with its projection on a solver grid and the flat
/// parameter vector exposed to the surrogate. For pointwise-velocity
/// scenarios the parameter is the (scalar or local) velocity itself; for
/// shaped fields it is the drawn shape coefficients.
struct FieldSample {
    VelocityFieldSpec field;
    std::vector<double> cell_values; ///< per cell of the target grid
    std::vector<double> params;      ///< theta fed to the surrogate
};

/// Zero-mean Gaussian process on the grid cell centers with covariance
/// sigma_Y2 * exp(-|dx|/s), mapped to a positive velocity field
/// v = v_bar * exp(Y) / E[exp(Y)]. Dense Cholesky factorization; one round
/// of 1e-12 diagonal jitter is attempted before failing.
FieldSample sample_expcov_field(double sigma_y2, double s, double v_bar, const Grid1D& g,
                                Rng& rng);

/// How the surrogate's extra inputs encode the velocity field.
/// PointwiseVelocity feeds the local velocity value itself (one input);
/// the shaped kinds feed the drawn shape coefficients.
struct VelocityParameterization {
    enum class Kind { PointwiseVelocity, Affine, Periodic, FourierModes };
    Kind kind = Kind::PointwiseVelocity;
    double b = 0.0;         ///< offset of the shaped fields
    double k = 1.0;         ///< angular frequency (Periodic)
    double amplitude = 1.0; ///< scale of the Fourier sum
    int modes = 1;          ///< theta count for FourierModes

    int param_count() const;
    double velocity_at(double x, std::span<const double> theta) const;
    VelocityFieldSpec realize(std::span<const double> theta) const;
};

/// Serialize (x, v) rows for inspection.
void write_field_csv(const FieldSample& sample, const Grid1D& g, const std::string& path);

} // namespace bluq
