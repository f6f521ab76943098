#include <cmath>
#include <filesystem>

#include "bluq/engine.hpp"
#include "bluq/errors.hpp"
#include "bluq/network.hpp"
#include "bluq/rng.hpp"
#include "doctest.h"

using namespace bluq;

namespace {

InputNormalization unit_norm(int dim) {
    InputNormalization n;
    n.lo = Eigen::VectorXd::Zero(dim);
    n.hi = Eigen::VectorXd::Ones(dim);
    return n;
}

MlpModel small_model(int input_dim, int output_dim, bool fourier, OutputMap map,
                     std::uint64_t seed) {
    FourierSettings fs;
    fs.enabled = fourier;
    fs.features = 4;
    fs.scale = 1.5;
    return make_mlp(input_dim, output_dim, 2, 8, unit_norm(input_dim), fs, map, seed);
}

// scalar loss over a batch exercising every output channel:
//   L = sum_i y^2 + yx^2 + yt^2 (+ yxx^2), summed over output rows
struct ChannelLoss {
    bool with_xx;
    double value(const MlpModel& m, const Eigen::MatrixXd& inputs) const {
        ChannelMask mask{true, true, with_xx};
        const BatchOutputs out = engine_forward(m, inputs, mask);
        double acc = out.y.array().square().sum() + out.yx.array().square().sum() +
                     out.yt.array().square().sum();
        if (with_xx) acc += out.yxx.array().square().sum();
        return acc;
    }
    void gradients(const MlpModel& m, const Eigen::MatrixXd& inputs, ParamGrads& grads) const {
        ChannelMask mask{true, true, with_xx};
        EngineWorkspace ws;
        const BatchOutputs out = engine_forward(m, inputs, mask, &ws);
        BatchOutputs seed;
        seed.y = 2.0 * out.y;
        seed.yx = 2.0 * out.yx;
        seed.yt = 2.0 * out.yt;
        if (with_xx) seed.yxx = 2.0 * out.yxx;
        engine_backward(m, ws, seed, grads);
    }
};

// walk every parameter, compare analytic vs central finite differences
void check_all_param_grads(MlpModel m, const Eigen::MatrixXd& inputs, bool with_xx,
                           double rel_tol) {
    const ChannelLoss loss{with_xx};
    ParamGrads grads;
    grads.set_zero_like(m);
    loss.gradients(m, inputs, grads);

    const double h = 1e-6;
    auto check_entry = [&](double& param, double analytic) {
        const double saved = param;
        param = saved + h;
        const double lp = loss.value(m, inputs);
        param = saved - h;
        const double lm = loss.value(m, inputs);
        param = saved;
        const double fd = (lp - lm) / (2.0 * h);
        const double scale = std::max({std::abs(fd), std::abs(analytic), 1e-6});
        CHECK(std::abs(fd - analytic) / scale < rel_tol);
    };
    if (m.has_fourier())
        for (Eigen::Index i = 0; i < m.fourier.rows(); ++i)
            for (Eigen::Index j = 0; j < m.fourier.cols(); ++j)
                check_entry(m.fourier(i, j), grads.d_fourier(i, j));
    for (std::size_t l = 0; l < m.w.size(); ++l) {
        for (Eigen::Index i = 0; i < m.w[l].rows(); ++i)
            for (Eigen::Index j = 0; j < m.w[l].cols(); ++j)
                check_entry(m.w[l](i, j), grads.dw[l](i, j));
        for (Eigen::Index i = 0; i < m.b[l].size(); ++i)
            check_entry(m.b[l](i), grads.db[l](i));
    }
}

Eigen::MatrixXd random_inputs(int dim, int n, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd m(dim, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < dim; ++i) m(i, j) = rng.uniform(0.05, 0.95);
    return m;
}

} // namespace

TEST_CASE("zero model evaluates to zero everywhere") {
    MlpModel m = small_model(3, 1, false, OutputMap::Linear, 11);
    for (auto& w : m.w) w.setZero();
    for (auto& b : m.b) b.setZero();
    const double inputs[3] = {0.3, 0.7, 0.2};
    CHECK(forward(m, inputs) == 0.0);
    const ValueGrad vg = forward_with_input_grad(m, inputs);
    CHECK(vg.value == 0.0);
    CHECK(vg.dx == 0.0);
    CHECK(vg.dt == 0.0);
}

TEST_CASE("zero Fourier matrix gives constant features and input-independent output") {
    MlpModel m = small_model(3, 1, true, OutputMap::Linear, 12);
    m.fourier.setZero();
    const double a[3] = {0.1, 0.2, 0.3};
    const double b[3] = {0.9, 0.6, 0.7};
    CHECK(forward(m, a) == doctest::Approx(forward(m, b)).epsilon(1e-15));
    const ValueGrad vg = forward_with_input_grad(m, a);
    CHECK(vg.dx == 0.0);
    CHECK(vg.dt == 0.0);
}

TEST_CASE("hand-built affine model reproduces a linear function exactly") {
    InputNormalization norm = unit_norm(2);
    MlpModel m = make_mlp(2, 1, 0, 1, norm, FourierSettings{}, OutputMap::Linear, 1);
    m.w[0](0, 0) = 2.0;
    m.w[0](0, 1) = 3.0;
    m.b[0](0) = -0.25;
    for (double x : {0.0, 0.31, 0.77}) {
        for (double t : {0.05, 0.5, 1.0}) {
            const double inputs[2] = {x, t};
            CHECK(forward(m, inputs) == doctest::Approx(2.0 * x + 3.0 * t - 0.25).epsilon(1e-12));
            const ValueGrad vg = forward_with_input_grad(m, inputs);
            CHECK(vg.dx == doctest::Approx(2.0).epsilon(1e-12));
            CHECK(vg.dt == doctest::Approx(3.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("input derivatives match finite differences of forward") {
    MlpModel m = small_model(3, 1, false, OutputMap::Linear, 42);
    const double h = 1e-5;
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        double u[3] = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
        const ValueGrad vg = forward_with_input_grad(m, u);
        double up[3] = {u[0] + h, u[1], u[2]};
        double um[3] = {u[0] - h, u[1], u[2]};
        const double fdx = (forward(m, up) - forward(m, um)) / (2.0 * h);
        up[0] = u[0];
        um[0] = u[0];
        up[1] = u[1] + h;
        um[1] = u[1] - h;
        const double fdt = (forward(m, up) - forward(m, um)) / (2.0 * h);
        CHECK(vg.dx == doctest::Approx(fdx).epsilon(1e-5));
        CHECK(vg.dt == doctest::Approx(fdt).epsilon(1e-5));
    }
}

TEST_CASE("second x-derivative channel matches finite differences") {
    for (bool fourier : {false, true}) {
        MlpModel m = small_model(3, 1, fourier, OutputMap::Linear, 99);
        ChannelMask mask{true, true, true};
        Rng rng(5);
        for (int trial = 0; trial < 10; ++trial) {
            Eigen::MatrixXd u(3, 1);
            u << rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8);
            const BatchOutputs out = engine_forward(m, u, mask);
            const double h = 1e-4;
            Eigen::MatrixXd up = u, um = u;
            up(0, 0) += h;
            um(0, 0) -= h;
            const double yc = engine_forward(m, u, ChannelMask{}).y(0, 0);
            const double yp = engine_forward(m, up, ChannelMask{}).y(0, 0);
            const double ym = engine_forward(m, um, ChannelMask{}).y(0, 0);
            const double fdxx = (yp - 2.0 * yc + ym) / (h * h);
            CHECK(out.yxx(0, 0) == doctest::Approx(fdxx).epsilon(1e-4));
        }
    }
}

TEST_CASE("parameter gradients match finite differences (plain)") {
    MlpModel m = small_model(3, 1, false, OutputMap::Linear, 301);
    check_all_param_grads(m, random_inputs(3, 7, 17), false, 1e-6);
}

TEST_CASE("parameter gradients match finite differences (second derivatives)") {
    MlpModel m = small_model(3, 1, false, OutputMap::Linear, 302);
    check_all_param_grads(m, random_inputs(3, 5, 18), true, 1e-5);
}

TEST_CASE("parameter gradients match finite differences (Fourier features)") {
    MlpModel m = small_model(3, 1, true, OutputMap::Linear, 303);
    check_all_param_grads(m, random_inputs(3, 5, 19), true, 1e-5);
}

TEST_CASE("parameter gradients match finite differences (mean/std head)") {
    MlpModel m = small_model(2, 2, false, OutputMap::MeanStd, 304);
    check_all_param_grads(m, random_inputs(2, 5, 20), true, 1e-5);
}

TEST_CASE("softplus head output is positive") {
    MlpModel m = small_model(2, 2, false, OutputMap::MeanStd, 305);
    Rng rng(3);
    for (int trial = 0; trial < 25; ++trial) {
        const double u[2] = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
        const Eigen::VectorXd y = forward_vec(m, u);
        CHECK(y(1) > 0.0);
    }
}

TEST_CASE("checkpoint round trip reproduces outputs bitwise") {
    const auto path = std::filesystem::temp_directory_path() / "bluq_ckpt_test.json";
    MlpModel m = small_model(3, 1, true, OutputMap::Linear, 1234);
    save_checkpoint(m, "deadbeef", path.string());
    const Checkpoint loaded = load_checkpoint(path.string());
    CHECK(loaded.config_hash == "deadbeef");
    Rng rng(55);
    for (int trial = 0; trial < 50; ++trial) {
        const double u[3] = {rng.uniform(-0.2, 1.2), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
        const double a = forward(m, u);
        const double b = forward(loaded.model, u);
        CHECK(a == b); // bitwise
    }
    std::filesystem::remove(path);
}

TEST_CASE("normalization affine map round-trips") {
    InputNormalization norm;
    norm.lo.resize(3);
    norm.hi.resize(3);
    norm.lo << -1.0, 0.0, 0.5;
    norm.hi << 2.0, 10.0, 0.75;
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        for (int i = 0; i < 3; ++i) {
            const double u = rng.uniform(norm.lo(i), norm.hi(i));
            const double unit = (u - norm.lo(i)) / (norm.hi(i) - norm.lo(i));
            const double back = norm.lo(i) + unit * (norm.hi(i) - norm.lo(i));
            CHECK(std::abs(back - u) < 1e-12);
        }
    }
}

TEST_CASE("make_mlp validates shapes and ranges") {
    CHECK_THROWS_AS(make_mlp(0, 1, 2, 4, unit_norm(0), FourierSettings{}, OutputMap::Linear, 1),
                    ValidationError);
    InputNormalization bad = unit_norm(2);
    bad.hi(0) = bad.lo(0);
    CHECK_THROWS_AS(make_mlp(2, 1, 2, 4, bad, FourierSettings{}, OutputMap::Linear, 1),
                    ValidationError);
}
