#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bluq/engine.hpp"
#include "bluq/fluid.hpp"
#include "bluq/godunov.hpp"
#include "bluq/moc.hpp"
#include "bluq/velocity_field.hpp"
#include "bluq/welge.hpp"

namespace bluq {

enum class HullMode { Global, VelocityCorrelated };

struct OptimizerSettings {
    double step = 1e-3;
    int iterations = 20000;
    std::uint64_t seed = 0;
};

struct Range {
    double lo = 0.0, hi = 1.0;
};

struct TrainingConfig {
    int depth = 8;
    int width = 20;
    Activation activation = Activation::Tanh;
    int n_samples = 5000; ///< per condition (interior, initial, boundary)
    double w_ic = 1.0, w_bc = 1.0, w_residual = 1.0, w_planes = 1.0;
    OptimizerSettings optimizer;
    Range x_range{0.0, 1.0};
    Range t_range{0.0, 1.0};
    std::vector<Range> theta_ranges{{0.0, 10.0}};
    // strategy flags
    double diffusion_eps = 0.0;      ///< adds -eps * S_xx to the residual
    bool weighted_residual = false;  ///< 1/((S_x)^2+(S_t)^2+1) sample weights
    HullMode hull_mode = HullMode::Global;
    int continuity_planes = 0;       ///< flux-consistency planes (0 = off)
    bool use_velocity_net = false;   ///< v(x) from an auxiliary fitted net
    FourierSettings fourier;
    int resample_every = 0;          ///< 0 = one fixed sample set

    void validate() const;
    InputNormalization normalization() const;
    int input_dim() const { return 2 + static_cast<int>(theta_ranges.size()); }
};

/// Collocation samples, one column per point, rows (x, t, theta...).
struct SampleBatch {
    Eigen::MatrixXd interior;
    Eigen::MatrixXd initial;  // t = 0
    Eigen::MatrixXd boundary; // x = 0
    Eigen::MatrixXd planes;   // x fixed at plane locations; empty when off
};

SampleBatch draw_sample_batch(const TrainingConfig& cfg, Rng& rng);

/// Linear maps v -> shock saturation and v -> shock flux fitted on
/// finite-volume output, used by the velocity-correlated hull mode.
struct HullCorrelation {
    double alpha_s = 0.0, beta_s = 0.0;
    double alpha_f = 0.0, beta_f = 0.0;
    double r2_s = 0.0, r2_f = 0.0;
};

/// Everything the residual needs to know about the velocity field.
struct FieldContext {
    const VelocityParameterization* param = nullptr;
    const HullModel* hull = nullptr;            ///< Global hull mode
    const HullCorrelation* hull_corr = nullptr; ///< VelocityCorrelated mode
    const MlpModel* velocity_net = nullptr;     ///< when use_velocity_net
};

struct LossTerms {
    double ic = 0.0, bc = 0.0, residual = 0.0, planes = 0.0;
    double weighted_total(const TrainingConfig& cfg) const {
        return cfg.w_ic * ic + cfg.w_bc * bc + cfg.w_residual * residual + cfg.w_planes * planes;
    }
};

LossTerms loss_terms(const MlpModel& m, const SampleBatch& batch, const FluidParams& p,
                     const TrainingConfig& cfg, const FieldContext& ctx);

/// Same losses plus exact parameter gradients of the multiplier-weighted sum.
LossTerms loss_and_gradients(const MlpModel& m, const SampleBatch& batch, const FluidParams& p,
                             const TrainingConfig& cfg, const FieldContext& ctx,
                             ParamGrads& grads);

struct TrainResult {
    MlpModel model;
    std::vector<LossTerms> history;
};

/// Full-batch first-order (adaptive moment) minimization over a fixed sample
/// set. Deterministic function of (cfg, aux inputs). Throws
/// TrainingDivergence carrying the last finite state on NaN.
TrainResult train(const TrainingConfig& cfg, const FluidParams& p,
                  const VelocityParameterization& param,
                  const MlpModel* velocity_net = nullptr,
                  const HullCorrelation* hull_corr = nullptr);

/// Vectorized evaluation over an x grid; outputs clamped to [0,1].
/// Inputs outside the training support warn on stderr but still evaluate.
SaturationProfile infer_profile(const MlpModel& m, std::span<const double> x, double t,
                                std::span<const double> theta);

// ---- velocity-correlated hull fitting --------------------------------------

struct ShockObservation {
    double v;       ///< local velocity at the detected front
    double s_shock; ///< saturation just behind the front
};

/// Walks finite-volume snapshots, detecting the front and sampling the
/// post-shock saturation a few cells upstream.
std::vector<ShockObservation> collect_shock_observations(const SpaceTimeField& field,
                                                         std::span<const double> cell_velocities,
                                                         const FluidParams& p,
                                                         double delta = 0.01);

/// Least-squares lines through >= 30 observations. A zero-variance velocity
/// set degenerates to the flat line through the observation means.
HullCorrelation fit_hull_correlation(std::span<const ShockObservation> obs,
                                     const FluidParams& p);

/// Chord construction from the fitted correlation at local velocity v.
HullModel hull_from_correlation(const HullCorrelation& c, const FluidParams& p, double v);

// ---- auxiliary velocity network ---------------------------------------------

struct VelocityNetResult {
    MlpModel net;
    double holdout_rel_l2 = 0.0; ///< relative L2 misfit on held-out points
    std::vector<double> loss_history;
};

/// Supervised least-squares fit of x -> v on >= 100 pairs; every 5th pair is
/// held out for the misfit report. Throws TrainingDivergence when the loss
/// grows past 10x its starting value.
VelocityNetResult fit_velocity_net(std::span<const double> xs, std::span<const double> vs,
                                   int depth, int width, const FourierSettings& fourier,
                                   const OptimizerSettings& opt);

} // namespace bluq
