#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bluq/fluid.hpp"
#include "bluq/moc.hpp"
#include "bluq/network.hpp"
#include "bluq/velocity_field.hpp"

namespace bluq {

/// Shared evaluation lattices for every realization of an ensemble:
/// saturation profiles at the anchor times on x_profile, and time series at
/// the anchor locations on t_series.
struct EvalGrids {
    std::vector<double> x_profile;
    std::vector<double> t_anchors;
    std::vector<double> x_anchors;
    std::vector<double> t_series;
};

struct RealizationOutput {
    Eigen::MatrixXd profiles; ///< t_anchors.size() x x_profile.size()
    Eigen::MatrixXd series;   ///< x_anchors.size() x t_series.size()
};

class ForwardModel {
public:
    virtual ~ForwardModel() = default;
    virtual RealizationOutput evaluate(const FieldSample& sample, const EvalGrids& grids) const = 0;
    virtual std::string tag() const = 0;
};

/// Exact analytic model; fields must be constant in space.
class MocForwardModel : public ForwardModel {
public:
    explicit MocForwardModel(const FluidParams& p) : solver_(p) {}
    RealizationOutput evaluate(const FieldSample& sample, const EvalGrids& grids) const override;
    std::string tag() const override { return "moc"; }

private:
    MocSolver solver_;
};

class FvmForwardModel : public ForwardModel {
public:
    FvmForwardModel(const FluidParams& p, const Grid1D& g, TimeStepSpec dt_rule)
        : p_(p), g_(g), dt_rule_(dt_rule) {}
    RealizationOutput evaluate(const FieldSample& sample, const EvalGrids& grids) const override;
    std::string tag() const override { return "fvm"; }

private:
    FluidParams p_;
    Grid1D g_;
    TimeStepSpec dt_rule_;
};

/// Trained surrogate. For pointwise parameterizations the extra input is the
/// local field value; for shaped ones it is the drawn coefficient vector.
class SurrogateForwardModel : public ForwardModel {
public:
    SurrogateForwardModel(const MlpModel& m, const VelocityParameterization& param)
        : model_(&m), param_(param) {}
    RealizationOutput evaluate(const FieldSample& sample, const EvalGrids& grids) const override;
    std::string tag() const override { return "surrogate"; }

private:
    const MlpModel* model_;
    VelocityParameterization param_;
};

using FieldSampler = std::function<FieldSample(Rng&)>;

struct Ensemble {
    std::string scenario;
    std::string model_tag;
    EvalGrids grids;
    std::vector<std::vector<double>> params;
    std::vector<RealizationOutput> outputs;
    int size() const { return static_cast<int>(outputs.size()); }
};

/// n field draws from derived per-realization substreams of `seed`.
std::vector<FieldSample> draw_fields(const FieldSampler& sampler, int n, std::uint64_t seed);

Ensemble evaluate_ensemble(const ForwardModel& model, std::span<const FieldSample> fields,
                           const EvalGrids& grids, const std::string& scenario_id);

/// draw_fields + evaluate_ensemble in one step.
Ensemble run_ensemble(const ForwardModel& model, const FieldSampler& sampler, int n,
                      const EvalGrids& grids, std::uint64_t seed,
                      const std::string& scenario_id);

// ---- quantities of interest -------------------------------------------------

/// Largest x where s >= s_init + delta (linear interpolation); nullopt when
/// the front never rose or already left the window.
std::optional<double> front_radius(std::span<const double> x, std::span<const double> s,
                                   double s_init, double delta = 0.01);

/// First t where s >= s_init + delta (linear interpolation); nullopt when
/// the threshold is never reached.
std::optional<double> breakthrough_time(std::span<const double> t, std::span<const double> s,
                                        double s_init, double delta = 0.01);

enum class QoiKind { FrontRadius, Breakthrough };

struct QoiSamples {
    QoiKind kind;
    double anchor = 0.0;
    std::vector<double> values;    ///< finite samples only
    std::vector<bool> censored;    ///< per realization
    int censored_count = 0;
};

QoiSamples extract_qoi(const Ensemble& ens, QoiKind kind, int anchor_index, double s_init,
                       double delta = 0.01);

// ---- distribution distances ---------------------------------------------------

/// Exact W1 between two empirical distributions (area between their ECDFs).
double wasserstein1(std::span<const double> a, std::span<const double> b);

/// KL(ref || q) over a common binning; +infinity when q lacks mass where ref
/// has some (returned, not thrown). Histograms are normalized internally.
double kl_divergence(std::span<const double> hist_ref, std::span<const double> hist_q);

/// Jensen-Shannon divergence, symmetric and bounded by ln 2.
double jsd(std::span<const double> hist_a, std::span<const double> hist_b);

/// Normalized histogram with nbins equal bins on [lo, hi]; out-of-range
/// samples land in the edge bins.
std::vector<double> histogram(std::span<const double> samples, int nbins, double lo, double hi);

// ---- ensemble statistics ------------------------------------------------------

struct EnvelopeCurves {
    double t = 0.0;
    std::vector<double> x;
    std::vector<double> mean, p_lo, p_hi;
};

/// Pointwise mean and percentile band over realizations, one set of curves
/// per anchor time. Percentiles use linear interpolation of order statistics.
std::vector<EnvelopeCurves> envelope(const Ensemble& ens, double lo_pct = 15.0,
                                     double hi_pct = 85.0);

/// Quantile by linear interpolation of the sorted sample (q in [0,1]).
double quantile_linear(std::vector<double> values, double q);

// ---- comparison report ---------------------------------------------------------

struct AnchorComparison {
    double anchor = 0.0;
    double w1_model = 0.0;
    double w1_uniform = 0.0;
    double kl = 0.0;
    double jsd_value = 0.0;
    int censored_ref = 0;
    int censored_test = 0;
    bool skipped = false; ///< every realization censored
};

struct QoiComparison {
    QoiKind kind;
    std::vector<AnchorComparison> anchors;
    double avg_w1_model = 0.0;
    double avg_w1_uniform = 0.0;
    double relative_difference = 0.0; ///< avg_w1_model / avg_w1_uniform
};

struct ComparisonReport {
    QoiComparison front_radius;
    QoiComparison breakthrough;
};

/// Per-anchor W1 between the two ensembles' QOI distributions plus the
/// uniform-baseline distances. Paired ensembles (equal sizes from identical
/// draws) drop realizations censored in either member. The uniform baseline
/// spans [min, max] of the reference samples with a matching count, drawn
/// from a substream of `seed`.
ComparisonReport compare(const Ensemble& reference, const Ensemble& test, const FluidParams& p,
                         double delta = 0.01, std::uint64_t seed = 424242);

} // namespace bluq
