#include "bluq/network.hpp"

#include <fstream>

#include "bluq/engine.hpp"
#include "bluq/errors.hpp"
#include "bluq/rng.hpp"
#include "json.hpp"

namespace bluq {

std::size_t MlpModel::parameter_count() const {
    std::size_t count = static_cast<std::size_t>(fourier.size());
    for (std::size_t l = 0; l < w.size(); ++l)
        count += static_cast<std::size_t>(w[l].size() + b[l].size());
    return count;
}

MlpModel make_mlp(int input_dim, int output_dim, int depth, int width,
                  const InputNormalization& norm, const FourierSettings& fourier,
                  OutputMap output_map, std::uint64_t seed) {
    if (input_dim < 1 || output_dim < 1 || depth < 0 || width < 1)
        throw ValidationError("make_mlp: bad architecture sizes");
    if (norm.dim() != input_dim)
        throw ValidationError("make_mlp: normalization dimension mismatch");
    for (int i = 0; i < input_dim; ++i)
        if (!(norm.hi(i) > norm.lo(i)))
            throw ValidationError("make_mlp: normalization range must be non-degenerate");

    MlpModel m;
    m.norm = norm;
    m.output_map = output_map;
    Rng rng(seed);

    int first_in = input_dim;
    if (fourier.enabled) {
        if (fourier.features < 1 || !(fourier.scale > 0.0))
            throw ValidationError("make_mlp: bad Fourier settings");
        m.fourier.resize(fourier.features, input_dim);
        for (int i = 0; i < m.fourier.rows(); ++i)
            for (int j = 0; j < m.fourier.cols(); ++j)
                m.fourier(i, j) = fourier.scale * rng.normal();
        first_in = 2 * fourier.features;
    }

    std::vector<int> dims;
    dims.push_back(first_in);
    for (int l = 0; l < depth; ++l) dims.push_back(width);
    dims.push_back(output_dim);

    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l], fan_out = dims[l + 1];
        const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Eigen::MatrixXd wl(fan_out, fan_in);
        for (int i = 0; i < fan_out; ++i)
            for (int j = 0; j < fan_in; ++j) wl(i, j) = rng.uniform(-a, a);
        m.w.push_back(std::move(wl));
        m.b.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    return m;
}

namespace {

Eigen::MatrixXd column_from(const MlpModel& m, std::span<const double> input) {
    if (static_cast<int>(input.size()) != m.input_dim())
        throw ValidationError("forward: input size does not match model");
    Eigen::MatrixXd col(m.input_dim(), 1);
    for (int i = 0; i < m.input_dim(); ++i) col(i, 0) = input[i];
    return col;
}

} // namespace

Eigen::VectorXd forward_vec(const MlpModel& m, std::span<const double> input) {
    const BatchOutputs out = engine_forward(m, column_from(m, input), ChannelMask{});
    return out.y.col(0);
}

double forward(const MlpModel& m, std::span<const double> input) {
    return forward_vec(m, input)(0);
}

ValueGrad forward_with_input_grad(const MlpModel& m, std::span<const double> input) {
    ChannelMask mask;
    mask.dx = true;
    mask.dt = m.input_dim() >= 2;
    const BatchOutputs out = engine_forward(m, column_from(m, input), mask);
    return {out.y(0, 0), out.yx(0, 0), mask.dt ? out.yt(0, 0) : 0.0};
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    std::vector<double> data(m.data(), m.data() + m.size()); // column-major
    j["data"] = data;
    return j;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw ValidationError("checkpoint: matrix payload size mismatch");
    Eigen::MatrixXd m(rows, cols);
    std::copy(data.begin(), data.end(), m.data());
    return m;
}

} // namespace

void save_checkpoint(const MlpModel& m, const std::string& config_hash, const std::string& path) {
    nlohmann::json j;
    j["format"] = "bluq-checkpoint";
    j["version"] = 1;
    j["activation"] = "tanh";
    j["output_map"] = m.output_map == OutputMap::Linear ? "linear" : "mean_std";
    j["norm_lo"] = std::vector<double>(m.norm.lo.data(), m.norm.lo.data() + m.norm.lo.size());
    j["norm_hi"] = std::vector<double>(m.norm.hi.data(), m.norm.hi.data() + m.norm.hi.size());
    if (m.has_fourier()) j["fourier"] = matrix_to_json(m.fourier);
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < m.w.size(); ++l) {
        nlohmann::json layer;
        layer["w"] = matrix_to_json(m.w[l]);
        layer["b"] = std::vector<double>(m.b[l].data(), m.b[l].data() + m.b[l].size());
        layers.push_back(std::move(layer));
    }
    j["layers"] = std::move(layers);
    j["config_hash"] = config_hash;

    std::ofstream f(path);
    if (!f) throw ValidationError("save_checkpoint: cannot open " + path);
    f << j.dump(1) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("load_checkpoint: cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("load_checkpoint: parse failure: ") + e.what());
    }
    if (j.value("format", "") != "bluq-checkpoint" || j.value("version", 0) != 1)
        throw ValidationError("load_checkpoint: unrecognized format or version");

    Checkpoint out;
    MlpModel& m = out.model;
    const auto lo = j.at("norm_lo").get<std::vector<double>>();
    const auto hi = j.at("norm_hi").get<std::vector<double>>();
    m.norm.lo = Eigen::Map<const Eigen::VectorXd>(lo.data(), lo.size());
    m.norm.hi = Eigen::Map<const Eigen::VectorXd>(hi.data(), hi.size());
    m.output_map = j.at("output_map") == "mean_std" ? OutputMap::MeanStd : OutputMap::Linear;
    if (j.at("activation") != "tanh")
        throw ValidationError("load_checkpoint: unsupported activation tag");
    if (j.contains("fourier")) m.fourier = matrix_from_json(j.at("fourier"));
    for (const auto& layer : j.at("layers")) {
        m.w.push_back(matrix_from_json(layer.at("w")));
        const auto bv = layer.at("b").get<std::vector<double>>();
        m.b.push_back(Eigen::Map<const Eigen::VectorXd>(bv.data(), bv.size()));
    }
    if (m.w.empty()) throw ValidationError("load_checkpoint: no layers");
    // shape chain check
    int expect = m.has_fourier() ? 2 * static_cast<int>(m.fourier.rows()) : m.norm.dim();
    for (std::size_t l = 0; l < m.w.size(); ++l) {
        if (m.w[l].cols() != expect || m.b[l].size() != m.w[l].rows())
            throw ValidationError("load_checkpoint: layer shape chain broken");
        expect = static_cast<int>(m.w[l].rows());
    }
    out.config_hash = j.value("config_hash", "");
    return out;
}

} // namespace bluq
