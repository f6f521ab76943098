#include <algorithm>
#include <cmath>

#include "bluq/errors.hpp"
#include "bluq/moc.hpp"
#include "bluq/rng.hpp"
#include "bluq/scenario.hpp"
#include "bluq/uq.hpp"
#include "doctest.h"

using namespace bluq;

namespace {

const FluidParams kTrivial{0.0, 0.0, 1.0, 1.0, 0.0};

// quadrature oracle for the truncated-normal mean (Simpson)
double tn_mean_quadrature(double mu, double sg, double lo, double hi, int n = 20000) {
    auto density = [&](double x) {
        const double z = (x - mu) / sg;
        return std::exp(-0.5 * z * z);
    };
    double mass = 0.0, first = 0.0;
    const double h = (hi - lo) / n;
    for (int i = 0; i <= n; ++i) {
        const double x = lo + h * i;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        mass += w * density(x);
        first += w * x * density(x);
    }
    return first / mass;
}

EvalGrids small_grids() {
    EvalGrids g;
    g.t_anchors = {0.1, 0.3, 0.5};
    g.x_anchors = {0.1, 0.5};
    g.x_profile.resize(129);
    for (std::size_t i = 0; i < g.x_profile.size(); ++i) g.x_profile[i] = i / 128.0;
    g.t_series.resize(101);
    for (std::size_t i = 0; i < g.t_series.size(); ++i) g.t_series[i] = 2.0 * i / 100.0;
    return g;
}

FieldSampler narrow_sampler() {
    const DistributionSpec d = TruncatedNormal{1.0, 0.3, 0.5, 2.0};
    return [d](Rng& rng) {
        FieldSample s;
        const double v = sample_scalar(d, rng);
        s.field = ConstantField{v};
        s.cell_values.assign(8, v);
        s.params = {v};
        return s;
    };
}

} // namespace

TEST_CASE("W1 basics: identity, shift, symmetry, triangle") {
    Rng rng(1);
    std::vector<double> a(500), b(500), c(500);
    for (int i = 0; i < 500; ++i) {
        a[i] = rng.normal();
        b[i] = rng.normal() * 1.4 + 0.3;
        c[i] = rng.uniform(-2.0, 2.0);
    }
    CHECK(wasserstein1(a, a) == 0.0);
    std::vector<double> shifted(a);
    for (double& x : shifted) x += 0.37;
    CHECK(wasserstein1(a, shifted) == doctest::Approx(0.37).epsilon(1e-12));
    CHECK(wasserstein1(a, b) == doctest::Approx(wasserstein1(b, a)).epsilon(1e-12));
    CHECK(wasserstein1(a, c) <= wasserstein1(a, b) + wasserstein1(b, c) + 1e-12);
    CHECK(wasserstein1(a, b) > 0.0);
}

TEST_CASE("W1 between seeded gaussian samples approximates the mean shift") {
    Rng rng(20240809);
    std::vector<double> a(10000), b(10000);
    for (int i = 0; i < 10000; ++i) a[i] = rng.normal();
    for (int i = 0; i < 10000; ++i) b[i] = rng.normal() + 1.0;
    CHECK(std::abs(wasserstein1(a, b) - 1.0) <= 0.03);
}

TEST_CASE("W1 handles unequal sample counts") {
    std::vector<double> a{0.0, 1.0, 2.0, 3.0};
    std::vector<double> b{0.5, 1.5, 2.5};
    const double w = wasserstein1(a, b);
    CHECK(w > 0.0);
    CHECK(w == doctest::Approx(wasserstein1(b, a)).epsilon(1e-14));
}

TEST_CASE("KL and JSD on histograms") {
    const std::vector<double> p{1.0, 0.0};
    const std::vector<double> q{0.5, 0.5};
    CHECK(kl_divergence(p, p) == 0.0);
    CHECK(kl_divergence(p, q) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(std::isinf(kl_divergence(q, p))); // q has mass where p has none
    // JSD from the definition on the two-bin pair
    const double m0 = 0.75, m1 = 0.25;
    const double expect = 0.5 * (1.0 * std::log(1.0 / m0)) +
                          0.5 * (0.5 * std::log(0.5 / m0) + 0.5 * std::log(0.5 / m1));
    CHECK(jsd(p, q) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(jsd(p, q) <= std::log(2.0) + 1e-14);

    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> ha(8), hb(8);
        for (int i = 0; i < 8; ++i) {
            ha[i] = rng.uniform01() + 0.01;
            hb[i] = rng.uniform01() + 0.01;
        }
        CHECK(std::abs(jsd(ha, hb) - jsd(hb, ha)) <= 1e-12);
    }
}

TEST_CASE("front radius extraction") {
    std::vector<double> xs(2049);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = i / 2048.0;
    SUBCASE("flat profile is censored") {
        std::vector<double> s(xs.size(), 0.0);
        CHECK_FALSE(front_radius(xs, s, 0.0));
    }
    SUBCASE("analytic profile locates the shock") {
        const MocSolver solver(kTrivial);
        const SaturationProfile prof = solver.profile(1.0, xs, 0.5);
        const auto r = front_radius(prof.x, prof.s, 0.0);
        REQUIRE(r.has_value());
        CHECK(std::abs(*r - 0.60355339) <= 2.0 / 2048.0);
    }
    SUBCASE("constructed step at 0.3") {
        std::vector<double> s(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) s[i] = xs[i] <= 0.3 ? 0.8 : 0.0;
        const auto r = front_radius(xs, s, 0.0);
        REQUIRE(r.has_value());
        CHECK(std::abs(*r - 0.3) <= 1.0 / 2048.0);
    }
    SUBCASE("front beyond the window is censored") {
        std::vector<double> s(xs.size(), 0.9);
        CHECK_FALSE(front_radius(xs, s, 0.0));
    }
}

TEST_CASE("breakthrough extraction") {
    std::vector<double> ts(401);
    for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = i / 400.0;
    const MocSolver solver(kTrivial);
    SUBCASE("at the inlet the first snapshot wins") {
        std::vector<double> s(ts.size());
        for (std::size_t i = 0; i < ts.size(); ++i) s[i] = solver.saturation(1.0, 0.0, ts[i]);
        const auto bt = breakthrough_time(ts, s, 0.0);
        REQUIRE(bt.has_value());
        CHECK(*bt == ts[0]);
    }
    SUBCASE("analytic series at x=0.5") {
        std::vector<double> s(ts.size());
        for (std::size_t i = 0; i < ts.size(); ++i) s[i] = solver.saturation(1.0, 0.5, ts[i]);
        const auto bt = breakthrough_time(ts, s, 0.0);
        REQUIRE(bt.has_value());
        CHECK(std::abs(*bt - 0.41421356) <= 2.0 / 400.0);
    }
    SUBCASE("threshold never reached") {
        std::vector<double> s(ts.size(), 0.0);
        CHECK_FALSE(breakthrough_time(ts, s, 0.0));
    }
}

TEST_CASE("front radius and breakthrough are inverse-consistent on analytic output") {
    const MocSolver solver(kTrivial);
    std::vector<double> xs(2049);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = 1.2 * i / 2048.0;
    std::vector<double> ts(2001);
    for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = 1.5 * i / 2000.0;
    for (double t : {0.2, 0.4}) {
        const SaturationProfile prof = solver.profile(1.0, xs, t);
        const auto r = front_radius(prof.x, prof.s, 0.0);
        REQUIRE(r.has_value());
        std::vector<double> series(ts.size());
        for (std::size_t i = 0; i < ts.size(); ++i) series[i] = solver.saturation(1.0, *r, ts[i]);
        const auto bt = breakthrough_time(ts, series, 0.0);
        REQUIRE(bt.has_value());
        CHECK(std::abs(*bt - t) <= 4.0 * (ts[1] - ts[0]) + 4.0 * (xs[1] - xs[0]));
    }
}

TEST_CASE("envelope of identical and two-point ensembles") {
    Ensemble ens;
    ens.grids = small_grids();
    const auto nx = ens.grids.x_profile.size();
    RealizationOutput a, b;
    a.profiles = Eigen::MatrixXd::Zero(3, nx);
    a.series = Eigen::MatrixXd::Zero(2, ens.grids.t_series.size());
    b = a;
    SUBCASE("identical realizations collapse the band") {
        a.profiles.setConstant(0.42);
        b.profiles.setConstant(0.42);
        ens.outputs = {a, b};
        ens.params = {{}, {}};
        const auto curves = envelope(ens);
        for (const auto& c : curves)
            for (std::size_t i = 0; i < nx; ++i) {
                CHECK(c.mean[i] == doctest::Approx(0.42));
                CHECK(c.p_lo[i] == doctest::Approx(0.42));
                CHECK(c.p_hi[i] == doctest::Approx(0.42));
            }
    }
    SUBCASE("values {0,1} interpolate order statistics") {
        a.profiles.setConstant(0.0);
        b.profiles.setConstant(1.0);
        ens.outputs = {a, b};
        ens.params = {{}, {}};
        const auto curves = envelope(ens);
        CHECK(curves[0].mean[3] == doctest::Approx(0.5));
        CHECK(curves[0].p_lo[3] == doctest::Approx(0.15));
        CHECK(curves[0].p_hi[3] == doctest::Approx(0.85));
    }
}

TEST_CASE("envelope matches an independent sort-based recomputation") {
    const MocForwardModel model(kTrivial);
    const EvalGrids grids = small_grids();
    const Ensemble ens = run_ensemble(model, narrow_sampler(), 300, grids, 99, "narrow");
    const auto curves = envelope(ens);
    Rng pick(4);
    for (int trial = 0; trial < 40; ++trial) {
        const auto ti = static_cast<std::size_t>(pick.uniform(0.0, 3.0));
        const auto xi = static_cast<std::size_t>(pick.uniform(0.0, 129.0));
        std::vector<double> col(ens.outputs.size());
        for (std::size_t r = 0; r < col.size(); ++r) col[r] = ens.outputs[r].profiles(ti, xi);
        std::sort(col.begin(), col.end());
        double mean = 0.0;
        for (double v : col) mean += v;
        mean /= col.size();
        const double pos = 0.15 * (col.size() - 1);
        const auto j = static_cast<std::size_t>(pos);
        const double p15 = col[j] + (pos - j) * (col[j + 1] - col[j]);
        CHECK(curves[ti].mean[xi] == doctest::Approx(mean).epsilon(1e-12));
        CHECK(curves[ti].p_lo[xi] == doctest::Approx(p15).epsilon(1e-12));
    }
}

TEST_CASE("single-realization ensemble equals the deterministic profile") {
    const MocForwardModel model(kTrivial);
    const EvalGrids grids = small_grids();
    FieldSampler constant = [](Rng&) {
        FieldSample s;
        s.field = ConstantField{1.0};
        s.cell_values.assign(8, 1.0);
        s.params = {1.0};
        return s;
    };
    const Ensemble ens = run_ensemble(model, constant, 1, grids, 1, "det");
    const MocSolver solver(kTrivial);
    for (std::size_t xi = 0; xi < grids.x_profile.size(); ++xi)
        CHECK(ens.outputs[0].profiles(1, xi) ==
              doctest::Approx(solver.saturation(1.0, grids.x_profile[xi], grids.t_anchors[1])));
}

TEST_CASE("ensembles are reproducible under the seed") {
    const MocForwardModel model(kTrivial);
    const EvalGrids grids = small_grids();
    const Ensemble a = run_ensemble(model, narrow_sampler(), 50, grids, 31337, "narrow");
    const Ensemble b = run_ensemble(model, narrow_sampler(), 50, grids, 31337, "narrow");
    for (int r = 0; r < 50; ++r) {
        CHECK(a.params[r][0] == b.params[r][0]);
        CHECK((a.outputs[r].profiles - b.outputs[r].profiles).norm() == 0.0);
    }
}

TEST_CASE("ensemble mean front radius tracks sigma E[v] t") {
    const MocForwardModel model(kTrivial);
    EvalGrids grids = small_grids();
    const Ensemble ens = run_ensemble(model, narrow_sampler(), 1000, grids, 2025, "narrow");
    const QoiSamples q = extract_qoi(ens, QoiKind::FrontRadius, 1, kTrivial.s_init); // t = 0.3
    REQUIRE(q.values.size() > 900);
    double mean = 0.0;
    for (double v : q.values) mean += v;
    mean /= q.values.size();
    const double ev = tn_mean_quadrature(1.0, 0.3, 0.5, 2.0);
    const double expect = 1.2071067811865475 * ev * 0.3;
    CHECK(std::abs(mean - expect) <= 0.02 * expect);
}

TEST_CASE("comparison of an ensemble with itself reports zero") {
    const MocForwardModel model(kTrivial);
    const EvalGrids grids = small_grids();
    const Ensemble ens = run_ensemble(model, narrow_sampler(), 200, grids, 5, "narrow");
    const ComparisonReport rep = compare(ens, ens, kTrivial);
    CHECK(rep.front_radius.avg_w1_model == 0.0);
    CHECK(rep.breakthrough.avg_w1_model == 0.0);
    CHECK(rep.front_radius.relative_difference == 0.0);
    CHECK(rep.front_radius.avg_w1_uniform > 0.0);
}

TEST_CASE("a uniform-like test ensemble lands near 100 percent relative difference") {
    // reference: MOC narrow ensemble; test: front radii replaced by uniform
    // draws over the reference range (same machinery as the baseline)
    const MocForwardModel model(kTrivial);
    EvalGrids grids = small_grids();
    grids.t_anchors = {0.3};
    grids.x_anchors = {0.3};
    const Ensemble ref = run_ensemble(model, narrow_sampler(), 500, grids, 6, "narrow");
    Ensemble fake = ref;
    // synthesize step profiles whose detected radius is uniform over the
    // reference span
    const QoiSamples q = extract_qoi(ref, QoiKind::FrontRadius, 0, 0.0);
    const auto [mn, mx] = std::minmax_element(q.values.begin(), q.values.end());
    Rng rng(42);
    for (auto& out : fake.outputs) {
        const double r = rng.uniform(*mn, *mx);
        for (std::size_t xi = 0; xi < grids.x_profile.size(); ++xi)
            out.profiles(0, xi) = grids.x_profile[xi] <= r ? 0.8 : 0.0;
    }
    const ComparisonReport rep = compare(ref, fake, kTrivial);
    CHECK(rep.front_radius.relative_difference > 0.4);
    CHECK(rep.front_radius.relative_difference < 1.6);
}
