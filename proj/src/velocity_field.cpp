#include "bluq/velocity_field.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <numbers>

#include "bluq/errors.hpp"

namespace bluq {

double eval_field(const VelocityFieldSpec& f, double x) {
    return std::visit(
        [x](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ConstantField>) {
                return v.v;
            } else if constexpr (std::is_same_v<T, AffineField>) {
                return v.theta * x + v.b;
            } else if constexpr (std::is_same_v<T, PeriodicField>) {
                return v.theta * std::sin(v.k * x) + v.b;
            } else if constexpr (std::is_same_v<T, FourierSeriesField>) {
                double acc = 0.0;
                for (std::size_t k = 0; k < v.theta.size(); ++k)
                    acc += v.theta[k] * std::sin(2.0 * std::numbers::pi * (k + 1) * x);
                return v.amplitude * acc + v.b;
            } else if constexpr (std::is_same_v<T, TanhStairsField>) {
                return 2.0 - (std::tanh(80.0 * (x - 0.25)) / 4.0 +
                              std::tanh(80.0 * (x - 0.5)) / 4.0 +
                              std::tanh(80.0 * (x - 0.75)) / 4.0 + 0.75);
            } else if constexpr (std::is_same_v<T, HighFreqCosineField>) {
                return 1.5 + std::cos(100.0 * x);
            } else {
                static_assert(std::is_same_v<T, GriddedField>);
                if (v.values.empty()) throw ValidationError("GriddedField: empty values");
                const double dx = v.x_max / static_cast<double>(v.values.size());
                auto i = static_cast<std::size_t>(x / dx);
                if (i >= v.values.size()) i = v.values.size() - 1;
                return v.values[i];
            }
        },
        f);
}

bool field_positive(const VelocityFieldSpec& f, double x_max) {
    const int n = 1000;
    for (int i = 0; i <= n; ++i) {
        if (!(eval_field(f, x_max * i / n) > 0.0)) return false;
    }
    return true;
}

FieldSample sample_expcov_field(double sigma_y2, double s, double v_bar, const Grid1D& g,
                                Rng& rng) {
    if (!(sigma_y2 >= 0.0)) throw ValidationError("sample_expcov_field: sigma_y2 must be >= 0");
    if (!(s > 0.0)) throw ValidationError("sample_expcov_field: s must be > 0");
    if (!(v_bar > 0.0)) throw ValidationError("sample_expcov_field: v_bar must be > 0");
    g.validate();

    const int n = g.n_cells;
    FieldSample out;
    out.cell_values.resize(n);

    if (sigma_y2 == 0.0) {
        std::fill(out.cell_values.begin(), out.cell_values.end(), v_bar);
    } else {
        Eigen::MatrixXd cov(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) {
                const double c = sigma_y2 * std::exp(-std::abs(g.center(i) - g.center(j)) / s);
                cov(i, j) = c;
                cov(j, i) = c;
            }
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) {
            cov.diagonal().array() += 1e-12;
            llt.compute(cov);
            if (llt.info() != Eigen::Success)
                throw NumericalError("sample_expcov_field: covariance factorization failed");
        }
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z(i) = rng.normal();
        const Eigen::VectorXd y = llt.matrixL() * z;
        // lognormal mean correction so that E[v] = v_bar
        const double norm = std::exp(0.5 * sigma_y2);
        for (int i = 0; i < n; ++i) out.cell_values[i] = v_bar * std::exp(y(i)) / norm;
    }

    out.field = GriddedField{out.cell_values, g.x_max};
    out.params = {};
    return out;
}

int VelocityParameterization::param_count() const {
    return kind == Kind::FourierModes ? modes : 1;
}

double VelocityParameterization::velocity_at(double x, std::span<const double> theta) const {
    if (static_cast<int>(theta.size()) != param_count())
        throw ValidationError("VelocityParameterization: theta size mismatch");
    switch (kind) {
        case Kind::PointwiseVelocity: return theta[0];
        case Kind::Affine: return theta[0] * x + b;
        case Kind::Periodic: return theta[0] * std::sin(k * x) + b;
        case Kind::FourierModes: {
            double acc = 0.0;
            for (int j = 0; j < modes; ++j)
                acc += theta[j] * std::sin(2.0 * std::numbers::pi * (j + 1) * x);
            return amplitude * acc + b;
        }
    }
    throw ValidationError("VelocityParameterization: bad kind");
}

VelocityFieldSpec VelocityParameterization::realize(std::span<const double> theta) const {
    if (static_cast<int>(theta.size()) != param_count())
        throw ValidationError("VelocityParameterization: theta size mismatch");
    switch (kind) {
        case Kind::PointwiseVelocity: return ConstantField{theta[0]};
        case Kind::Affine: return AffineField{theta[0], b};
        case Kind::Periodic: return PeriodicField{theta[0], k, b};
        case Kind::FourierModes:
            return FourierSeriesField{{theta.begin(), theta.end()}, amplitude, b};
    }
    throw ValidationError("VelocityParameterization: bad kind");
}

void write_field_csv(const FieldSample& sample, const Grid1D& g, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ValidationError("write_field_csv: cannot open " + path);
    f << "x,v_d\n";
    for (int i = 0; i < g.n_cells; ++i) f << g.center(i) << "," << sample.cell_values[i] << "\n";
}

} // namespace bluq
