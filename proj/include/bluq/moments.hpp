#pragma once

#include <span>
#include <vector>

#include "bluq/fluid.hpp"
#include "bluq/godunov.hpp"
#include "bluq/network.hpp"
#include "bluq/pinn.hpp"
#include "bluq/uq.hpp"

namespace bluq {

struct MomentsConfig {
    double v_bar = 1.0;
    double sigma_y2 = 0.1;
    double s = 2.0; ///< correlation length
    Grid1D grid{256, 1.0};
    double t_end = 0.5;
    std::vector<double> snapshots{0.1, 0.2, 0.3, 0.4, 0.5};

    void validate() const;
};

/// Longitudinal velocity covariance of the exponential log-field at lag x
/// (the lag is scaled by the correlation length internally). A series branch
/// below lag/s = 0.25 avoids the catastrophic cancellation of the closed
/// form near zero.
double vxx(double x, const MomentsConfig& cfg);

/// Closed-form integral of vxx from 0 to x; approaches v_bar^2 sigma_Y2 s as
/// x grows, non-decreasing, with the same series treatment near zero.
double vxx_integral(double x, const MomentsConfig& cfg);

struct MomentsSolution {
    enum class Provenance { FD, PINN, MC };
    std::vector<double> x, t;
    std::vector<std::vector<double>> mu;    ///< mu[ti][xi]
    std::vector<std::vector<double>> sigma; ///< sigma[ti][xi], >= 0
    Provenance provenance = Provenance::FD;
    double mass_balance = 0.0; ///< FD runs: conservation audit of the mean
};

/// Explicit finite-difference solve of the perturbation mean equation
/// (upwind advection, central diffusion) plus the companion fluctuation
/// transport. The time step is 0.8x the advective-diffusive stability bound.
MomentsSolution moments_fd_solve(const MomentsConfig& cfg, const FluidParams& p);

/// The dt the FD solver will choose for this configuration.
double moments_fd_timestep(const MomentsConfig& cfg, const FluidParams& p);

struct MomentsTrainingSettings {
    int depth = 6;
    int width = 20;
    int n_samples = 3000;
    OptimizerSettings optimizer;
    FourierSettings fourier;
};

struct MomentsLossTerms {
    double mu_residual = 0.0;
    double sigma_residual = 0.0;
    double ic = 0.0;
    double bc = 0.0;
    double total() const { return mu_residual + sigma_residual + ic + bc; }
};

struct MomentsPinnResult {
    MomentsSolution solution;
    MlpModel model;
    std::vector<MomentsLossTerms> history;
};

/// Two-output (mean, std) network trained on the joint mean/fluctuation
/// residuals with the hull-constrained flux; sigma is positive by
/// construction (softplus head) and pinned to zero at t = 0.
MomentsPinnResult moments_pinn_train(const MomentsConfig& cfg, const FluidParams& p,
                                     const MomentsTrainingSettings& settings);

/// Per-(x,t) mean and standard deviation of an ensemble's profiles.
MomentsSolution moments_from_ensemble(const Ensemble& ens);

struct ErrorMetricsResult {
    std::vector<double> e_std; ///< pointwise |y - y_ref|
    double r = 0.0;            ///< Pearson correlation
    bool r_defined = true;     ///< false when either input has zero variance
};

ErrorMetricsResult error_metrics(std::span<const double> y, std::span<const double> y_ref);

} // namespace bluq
