#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bluq/network.hpp"

namespace bluq {

/// Which input-derivative channels to propagate alongside values.
/// dx/dt refer to input rows 0 and 1; dxx is the second x-derivative.
struct ChannelMask {
    bool dx = false;
    bool dt = false;
    bool dxx = false;
};

/// Batched outputs, one column per sample; unused channels stay empty.
struct BatchOutputs {
    Eigen::MatrixXd y, yx, yt, yxx;
};

/// Gradient accumulator shaped like a model's parameters.
struct ParamGrads {
    Eigen::MatrixXd d_fourier;
    std::vector<Eigen::MatrixXd> dw;
    std::vector<Eigen::VectorXd> db;

    void set_zero_like(const MlpModel& m);
};

/// Per-layer forward caches needed by the reverse pass.
struct LayerCache {
    Eigen::MatrixXd h;              // post-activation values
    Eigen::MatrixXd hx, ht, hxx;    // post-activation derivative channels
    Eigen::MatrixXd zx, zt, zxx;    // pre-activation derivative channels
};

struct EngineWorkspace {
    ChannelMask mask;
    Eigen::MatrixXd u, ux, ut;                   // normalized inputs + seeds
    Eigen::MatrixXd psi, psix, psit;             // Fourier pre-features
    Eigen::MatrixXd feat, featx, featt, featxx;  // Fourier features
    std::vector<LayerCache> layers;              // hidden layers
    Eigen::MatrixXd oz, ozx, ozt, ozxx;          // pre-map output channels
};

/// Value (+ requested derivative channels) of the model over a batch of raw
/// inputs (input_dim x n). Fills `ws` for a subsequent engine_backward.
BatchOutputs engine_forward(const MlpModel& m, const Eigen::MatrixXd& inputs,
                            const ChannelMask& mask, EngineWorkspace* ws = nullptr);

/// Accumulates dL/d(params) into `grads` given the adjoints of the outputs
/// (dL/dy and channel adjoints, empty matrices meaning zero). The workspace
/// must come from an engine_forward on the same model and batch.
void engine_backward(const MlpModel& m, const EngineWorkspace& ws, const BatchOutputs& seed,
                     ParamGrads& grads);

} // namespace bluq
