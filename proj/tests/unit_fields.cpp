#include <cmath>
#include <numbers>

#include "bluq/distributions.hpp"
#include "bluq/errors.hpp"
#include "bluq/rng.hpp"
#include "bluq/velocity_field.hpp"
#include "doctest.h"

using namespace bluq;

namespace {

// quadrature oracle: mean of the truncated normal by composite Simpson
double tn_mean_quadrature(const TruncatedNormal& t, int n = 20000) {
    auto density = [&t](double x) {
        const double z = (x - t.mu) / t.sigma;
        return std::exp(-0.5 * z * z);
    };
    double mass = 0.0, first = 0.0;
    const double h = (t.up - t.low) / n;
    for (int i = 0; i <= n; ++i) {
        const double x = t.low + h * i;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        mass += w * density(x);
        first += w * x * density(x);
    }
    return first / mass;
}

} // namespace

TEST_CASE("derived streams are deterministic and distinct") {
    CHECK(derive_stream(42, 0) == derive_stream(42, 0));
    CHECK(derive_stream(42, 0) != derive_stream(42, 1));
    CHECK(derive_stream(42, 0) != derive_stream(43, 0));
    Rng a(7), b(7);
    for (int i = 0; i < 100; ++i) CHECK(a.uniform01() == b.uniform01());
}

TEST_CASE("box-muller fixed points") {
    CHECK(box_muller_pair(1.0, 0.37) == 0.0);
    CHECK(box_muller_pair(std::exp(-0.5), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(box_muller_pair(0.0, 0.5), std::domain_error);
}

TEST_CASE("box-muller moments over seeded uniforms") {
    Rng rng(2718);
    const int n = 100000;
    double mean = 0.0, var = 0.0;
    std::vector<double> vs(n);
    for (int i = 0; i < n; ++i) {
        vs[i] = box_muller_pair(1.0 - rng.uniform01(), rng.uniform01());
        mean += vs[i];
    }
    mean /= n;
    for (double v : vs) var += (v - mean) * (v - mean);
    var /= n - 1;
    CHECK(std::abs(mean) <= 0.02);
    CHECK(var >= 0.97);
    CHECK(var <= 1.03);
}

TEST_CASE("uniform sampling is reproducible and in range") {
    const DistributionSpec d = UniformDist{0.0, 1.0};
    Rng a(5), b(5);
    for (int i = 0; i < 1000; ++i) {
        const double x = sample_scalar(d, a);
        CHECK(x == sample_scalar(d, b));
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("truncated normal: never outside bounds, mean matches quadrature") {
    const TruncatedNormal tn{1.0, 0.3, 0.5, 2.0};
    const DistributionSpec d = tn;
    Rng rng(31415);
    const int n = 100000;
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = sample_scalar(d, rng);
        REQUIRE(x >= tn.low);
        REQUIRE(x <= tn.up);
        mean += x;
    }
    mean /= n;
    const double oracle = tn_mean_quadrature(tn);
    CHECK(oracle == doctest::Approx(1.0308689401).epsilon(1e-6)); // frozen cross-check
    CHECK(std::abs(mean - oracle) <= 0.01);
}

TEST_CASE("bimodal mixture shows two modes at the component means") {
    BimodalMixture mix;
    mix.weights = {0.5, 0.5};
    mix.components = {TruncatedNormal{0.75, 0.08, 0.5, 2.0}, TruncatedNormal{1.5, 0.1, 0.5, 2.0}};
    const DistributionSpec d = mix;
    Rng rng(999);
    const int n = 100000;
    int near_a = 0, near_b = 0, between = 0;
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = sample_scalar(d, rng);
        REQUIRE(x >= 0.5);
        REQUIRE(x <= 2.0);
        mean += x;
        if (std::abs(x - 0.75) < 0.08) ++near_a;
        if (std::abs(x - 1.5) < 0.08) ++near_b;
        if (std::abs(x - 1.125) < 0.08) ++between;
    }
    mean /= n;
    CHECK(near_a > 5 * between);
    CHECK(near_b > 5 * between);
    const double oracle = 0.5 * tn_mean_quadrature(mix.components[0]) +
                          0.5 * tn_mean_quadrature(mix.components[1]);
    CHECK(std::abs(mean - oracle) <= 0.01);
}

TEST_CASE("pathological truncation bounds raise a sampling error") {
    const DistributionSpec d = TruncatedNormal{0.0, 1e-6, 100.0, 100.1};
    Rng rng(1);
    CHECK_THROWS_AS(sample_scalar(d, rng), NumericalError);
}

TEST_CASE("distribution validation lists violations") {
    CHECK_THROWS_AS(validate(DistributionSpec{UniformDist{2.0, 1.0}}), ValidationError);
    CHECK_THROWS_AS(validate(DistributionSpec{TruncatedNormal{0.0, -1.0, 0.0, 1.0}}),
                    ValidationError);
    BimodalMixture bad;
    bad.weights = {0.7, 0.7};
    CHECK_THROWS_AS(validate(DistributionSpec{bad}), ValidationError);
}

TEST_CASE("field evaluation formulas") {
    CHECK(eval_field(ConstantField{2.0}, 0.37) == 2.0);
    CHECK(eval_field(AffineField{1.0, 0.5}, 0.5) == doctest::Approx(1.0));
    CHECK(eval_field(HighFreqCosineField{}, 0.0) == doctest::Approx(2.5));
    CHECK(eval_field(PeriodicField{0.8, 5.0, 0.5}, 0.3) ==
          doctest::Approx(0.8 * std::sin(1.5) + 0.5));
    FourierSeriesField fs;
    fs.theta = {0.5, 0.25};
    fs.amplitude = 2.0;
    fs.b = 1.0;
    const double x = 0.2;
    const double expected = 2.0 * (0.5 * std::sin(2.0 * std::numbers::pi * x) +
                                   0.25 * std::sin(4.0 * std::numbers::pi * x)) +
                            1.0;
    CHECK(eval_field(fs, x) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("stair field levels") {
    CHECK(eval_field(TanhStairsField{}, 0.1) == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(eval_field(TanhStairsField{}, 0.375) == doctest::Approx(1.5).epsilon(1e-3));
    CHECK(eval_field(TanhStairsField{}, 0.625) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(eval_field(TanhStairsField{}, 0.9) == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("gridded field is piecewise constant per cell") {
    GriddedField g;
    g.values = {1.0, 2.0, 3.0, 4.0};
    g.x_max = 1.0;
    CHECK(eval_field(g, 0.1) == 1.0);
    CHECK(eval_field(g, 0.26) == 2.0);
    CHECK(eval_field(g, 0.99) == 4.0);
    CHECK(eval_field(g, 1.0) == 4.0); // clamped at the last cell
}

TEST_CASE("positivity scan") {
    CHECK(field_positive(ConstantField{0.1}, 1.0));
    CHECK_FALSE(field_positive(PeriodicField{1.0, 25.0, 0.5}, 1.0)); // dips below zero
    CHECK(field_positive(PeriodicField{0.4, 25.0, 0.5}, 1.0));
}

TEST_CASE("exp-covariance field: degenerate variance gives the constant field") {
    const Grid1D g{64, 1.0};
    Rng rng(8);
    const FieldSample s = sample_expcov_field(0.0, 2.0, 1.3, g, rng);
    for (double v : s.cell_values) CHECK(v == 1.3);
}

TEST_CASE("exp-covariance field: empirical statistics match the model") {
    const Grid1D g{64, 1.0};
    const double s_corr = 2.0, sigma_y2 = 0.1, v_bar = 1.0;
    const int n = 10000;
    std::vector<std::vector<double>> ys;
    ys.reserve(n);
    double mean_v = 0.0;
    Rng master(777);
    for (int r = 0; r < n; ++r) {
        Rng rng = master.substream(r);
        const FieldSample sample = sample_expcov_field(sigma_y2, s_corr, v_bar, g, rng);
        std::vector<double> y(g.n_cells);
        for (int i = 0; i < g.n_cells; ++i) {
            y[i] = std::log(sample.cell_values[i]);
            mean_v += sample.cell_values[i];
        }
        ys.push_back(std::move(y));
    }
    mean_v /= static_cast<double>(n) * g.n_cells;
    CHECK(std::abs(mean_v - v_bar) <= 0.01 * v_bar);

    // lag correlations of the log-field against exp(-lag dx / s)
    const double dx = g.dx();
    for (int lag : {1, 4, 16}) {
        double num = 0.0, den_a = 0.0, den_b = 0.0, ma = 0.0, mb = 0.0;
        const int pairs_per = g.n_cells - lag;
        for (const auto& y : ys)
            for (int i = 0; i < pairs_per; ++i) {
                ma += y[i];
                mb += y[i + lag];
            }
        const double total = static_cast<double>(n) * pairs_per;
        ma /= total;
        mb /= total;
        for (const auto& y : ys)
            for (int i = 0; i < pairs_per; ++i) {
                num += (y[i] - ma) * (y[i + lag] - mb);
                den_a += (y[i] - ma) * (y[i] - ma);
                den_b += (y[i + lag] - mb) * (y[i + lag] - mb);
            }
        const double corr = num / std::sqrt(den_a * den_b);
        CHECK(std::abs(corr - std::exp(-lag * dx / s_corr)) <= 0.05);
    }
}

TEST_CASE("velocity parameterization matches realized fields") {
    Rng rng(66);
    VelocityParameterization param;
    param.kind = VelocityParameterization::Kind::FourierModes;
    param.modes = 3;
    param.amplitude = 1.5;
    param.b = 1.0;
    for (int trial = 0; trial < 30; ++trial) {
        const std::vector<double> theta = {rng.uniform01(), rng.uniform01(), rng.uniform01()};
        const VelocityFieldSpec field = param.realize(theta);
        const double x = rng.uniform01();
        CHECK(param.velocity_at(x, theta) == doctest::Approx(eval_field(field, x)).epsilon(1e-14));
    }
}
