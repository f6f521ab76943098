#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bluq {

enum class Activation { Tanh };

/// Output rows of the final affine layer can be mapped elementwise.
/// MeanStd is the two-output moments head: row 0 linear (mean), row 1
/// softplus so the standard-deviation output is positive by construction.
enum class OutputMap { Linear, MeanStd };

struct FourierSettings {
    bool enabled = false;
    int features = 64;  ///< rows of the feature matrix (output is 2x that)
    double scale = 5.0; ///< stddev of the normal init of the feature matrix
};

/// Per-input affine map onto [0,1] over the training support.
struct InputNormalization {
    Eigen::VectorXd lo, hi;
    int dim() const { return static_cast<int>(lo.size()); }
};

/// Dense tanh network with optional trainable Fourier input features.
/// Input convention: row 0 is x, row 1 is t, remaining rows are the
/// velocity parameters.
struct MlpModel {
    Eigen::MatrixXd fourier; ///< features x input_dim; 0x0 when disabled
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    InputNormalization norm;
    Activation activation = Activation::Tanh;
    OutputMap output_map = OutputMap::Linear;

    int input_dim() const { return norm.dim(); }
    int output_dim() const { return static_cast<int>(b.back().size()); }
    bool has_fourier() const { return fourier.rows() > 0; }
    std::size_t parameter_count() const;
};

/// Fresh model with symmetric uniform fan-in init, biases zero, and (when
/// enabled) a Fourier matrix drawn from N(0, scale^2).
MlpModel make_mlp(int input_dim, int output_dim, int depth, int width,
                  const InputNormalization& norm, const FourierSettings& fourier,
                  OutputMap output_map, std::uint64_t seed);

/// Scalar forward evaluation (first output row).
double forward(const MlpModel& m, std::span<const double> input);

Eigen::VectorXd forward_vec(const MlpModel& m, std::span<const double> input);

struct ValueGrad {
    double value, dx, dt;
};

/// Output value with exact derivatives with respect to the raw x and t
/// inputs (chain rule through normalization and the Fourier layer).
ValueGrad forward_with_input_grad(const MlpModel& m, std::span<const double> input);

/// Versioned JSON checkpoint. Doubles survive the round trip bitwise, so a
/// loaded model reproduces forward outputs exactly. `config_hash` is stored
/// verbatim for provenance.
void save_checkpoint(const MlpModel& m, const std::string& config_hash, const std::string& path);

struct Checkpoint {
    MlpModel model;
    std::string config_hash;
};
Checkpoint load_checkpoint(const std::string& path);

} // namespace bluq
