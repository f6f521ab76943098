#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bluq/distributions.hpp"
#include "bluq/fluid.hpp"
#include "bluq/godunov.hpp"
#include "bluq/moments.hpp"
#include "bluq/pinn.hpp"
#include "bluq/uq.hpp"
#include "bluq/velocity_field.hpp"

namespace bluq {

enum class ReferenceModel { Moc, Fvm };

/// How realizations are generated.
enum class SamplingMode {
    Parametric,    ///< draw theta, realize a shaped field
    GriddedIid,    ///< independent per-cell draws
    ExpCov,        ///< exponential-covariance Gaussian process
    Deterministic, ///< one fixed field
};

struct EnsembleSettings {
    int n = 1000;
    double qoi_delta = 0.01;
    int profile_csv_max = 20; ///< realizations written to the profiles CSV
};

struct AnchorSettings {
    std::vector<double> times{0.1, 0.2, 0.3, 0.4, 0.5};
    std::vector<double> locations{0.1, 0.3, 0.5, 0.7, 0.9};
    int profile_points = 257;
    double profile_x_max = 1.0;
    int series_points = 201;
    double t_series_max = 2.0;
};

struct MomentsPhase {
    MomentsConfig config;
    int mc_realizations = 500;
    MomentsTrainingSettings training;
};

struct ScenarioConfig {
    std::string id = "custom";
    std::uint64_t seed = 0;
    bool seed_set = false; ///< parse_config refuses configs without a seed
    std::string out_dir = "out";

    FluidParams fluid;
    SamplingMode mode = SamplingMode::Parametric;
    VelocityParameterization param;
    std::vector<DistributionSpec> theta_dists{TruncatedNormal{1.0, 0.3, 0.5, 2.0}};
    double expcov_sigma_y2 = 0.1;
    double expcov_s = 2.0;
    double expcov_vbar = 1.0;
    VelocityFieldSpec deterministic_field = ConstantField{1.0};

    ReferenceModel reference = ReferenceModel::Moc;
    Grid1D grid{256, 1.0};
    TimeStepSpec dt_rule = TimeStepSpec::fixed_ratio(15.0);
    EnsembleSettings ensemble;
    AnchorSettings anchors;

    std::optional<TrainingConfig> training;
    std::string surrogate_checkpoint; ///< reuse a trained model (no retraining)
    std::optional<MomentsPhase> moments;
    long max_field_resample = 1000000;

    /// Throws ValidationError listing every violation at once.
    void validate() const;
};

std::vector<std::string> preset_names();

/// Scenario presets matching the studied configurations; throws
/// ValidationError for unknown names.
ScenarioConfig preset(const std::string& name);

/// Strict parse: unknown keys are errors, all validation failures are
/// reported together.
ScenarioConfig parse_config(const std::string& json_text);

/// Canonical JSON (stable key order); parse_config round-trips it.
std::string serialize_config(const ScenarioConfig& cfg);

/// FNV-1a 64 hash of the canonical serialization, as hex.
std::string config_hash(const ScenarioConfig& cfg);

/// Realization sampler with the positivity scan and resample cap wired in.
FieldSampler make_sampler(const ScenarioConfig& cfg);

EvalGrids make_eval_grids(const ScenarioConfig& cfg);

} // namespace bluq
