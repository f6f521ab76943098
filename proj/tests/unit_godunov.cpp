#include <cmath>

#include "bluq/errors.hpp"
#include "bluq/godunov.hpp"
#include "bluq/moc.hpp"
#include "bluq/rng.hpp"
#include "doctest.h"

using namespace bluq;

namespace {

const FluidParams kTrivial{0.0, 0.0, 1.0, 1.0, 0.0};
const FluidParams kM2{0.0, 0.0, 2.0, 1.0, 0.0};
const FluidParams kResidual{0.1, 0.05, 2.0, 1.0, 0.15};

// dense-scan oracle for the interface flux definition
double godunov_scan(const FluidParams& p, double sl, double sr, int n = 10000) {
    const double lo = std::min(sl, sr), hi = std::max(sl, sr);
    double best = sl <= sr ? std::numeric_limits<double>::infinity()
                           : -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i) {
        const double s = lo + (hi - lo) * i / n;
        const double f = fractional_flow(s, p);
        best = sl <= sr ? std::min(best, f) : std::max(best, f);
    }
    return best;
}

double l1_distance_to_moc(const SpaceTimeField& field, const MocSolver& moc, double v,
                          double t) {
    double acc = 0.0;
    const double dx = field.x[1] - field.x[0];
    const auto& s = field.s.back();
    for (std::size_t i = 0; i < field.x.size(); ++i)
        acc += std::abs(s[i] - moc.saturation(v, field.x[i], t)) * dx;
    return acc;
}

} // namespace

TEST_CASE("interface flux: degenerate interval") {
    for (double s : {0.0, 0.33, 0.71, 1.0})
        CHECK(godunov_flux(kTrivial, s, s) == doctest::Approx(fractional_flow(s, kTrivial)));
}

TEST_CASE("interface flux: decreasing data takes the maximum") {
    CHECK(godunov_flux(kTrivial, 1.0, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("interface flux matches the dense-scan oracle") {
    Rng rng(404);
    for (int trial = 0; trial < 200; ++trial) {
        const double sl = rng.uniform(0.0, 1.0);
        const double sr = rng.uniform(0.0, 1.0);
        CHECK(std::abs(godunov_flux(kM2, sl, sr) - godunov_scan(kM2, sl, sr)) < 1e-6);
    }
}

TEST_CASE("homogeneous solve tracks the analytic solution") {
    const Grid1D g{256, 1.0};
    const std::vector<double> v(256, 1.0);
    const double snaps[] = {0.5};
    const SpaceTimeField field =
        fvm_solve(kTrivial, v, g, 0.5, TimeStepSpec::fixed_ratio(15.0), snaps);
    const MocSolver moc(kTrivial);
    CHECK(l1_distance_to_moc(field, moc, 1.0, 0.5) <= 0.02);
}

TEST_CASE("first-order convergence toward the analytic solution") {
    const MocSolver moc(kTrivial);
    double prev = std::numeric_limits<double>::infinity();
    for (int n : {64, 128, 256, 512}) {
        const Grid1D g{n, 1.0};
        const std::vector<double> v(n, 1.0);
        const double snaps[] = {0.5};
        const SpaceTimeField field =
            fvm_solve(kTrivial, v, g, 0.5, TimeStepSpec::fixed_ratio(15.0), snaps);
        const double err = l1_distance_to_moc(field, moc, 1.0, 0.5);
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("uniform velocity equals the homogeneous run bitwise") {
    const Grid1D g{64, 1.0};
    const double c = 1.37;
    const std::vector<double> v1(64, c), v2(64, c);
    const double snaps[] = {0.2, 0.4};
    const SpaceTimeField a = fvm_solve(kTrivial, v1, g, 0.4, TimeStepSpec::fixed_ratio(30.0), snaps);
    const SpaceTimeField b = fvm_solve(kTrivial, v2, g, 0.4, TimeStepSpec::fixed_ratio(30.0), snaps);
    REQUIRE(a.s.size() == b.s.size());
    for (std::size_t ti = 0; ti < a.s.size(); ++ti)
        for (std::size_t i = 0; i < a.s[ti].size(); ++i) CHECK(a.s[ti][i] == b.s[ti][i]);
}

TEST_CASE("zero-duration run returns the initial condition") {
    const Grid1D g{32, 1.0};
    const std::vector<double> v(32, 1.0);
    const SpaceTimeField field = fvm_solve(kTrivial, v, g, 0.0, TimeStepSpec::fixed_ratio(15.0), {});
    REQUIRE(field.s.size() == 1);
    for (double s : field.s[0]) CHECK(s == kTrivial.s_init);
    CHECK(mass_balance(field) == 0.0);
}

TEST_CASE("zero or negative velocities are rejected") {
    const Grid1D g{16, 1.0};
    std::vector<double> v(16, 1.0);
    v[7] = 0.0;
    CHECK_THROWS_AS(fvm_solve(kTrivial, v, g, 0.1, TimeStepSpec::fixed_ratio(15.0), {}),
                    ValidationError);
}

TEST_CASE("CFL violation is refused") {
    const Grid1D g{64, 1.0};
    const std::vector<double> v(64, 8.0); // wave speed 8 * 2 = 16 > 15
    CHECK_THROWS_AS(fvm_solve(kTrivial, v, g, 0.1, TimeStepSpec::fixed_ratio(15.0), {}),
                    ValidationError);
    const double dx = g.dx();
    CHECK_THROWS_AS(fvm_solve(kTrivial, v, g, 0.1, TimeStepSpec::explicit_dt(dx), {}),
                    ValidationError);
    // the CFL-fraction rule adapts and must pass
    CHECK_NOTHROW(fvm_solve(kTrivial, v, g, 0.05, TimeStepSpec::cfl_fraction(0.9), {}));
}

TEST_CASE("mass balance of completed runs stays at roundoff") {
    const Grid1D g{256, 1.0};
    SUBCASE("homogeneous to t=0.5") {
        const std::vector<double> v(256, 1.0);
        const double snaps[] = {0.5};
        const SpaceTimeField f =
            fvm_solve(kTrivial, v, g, 0.5, TimeStepSpec::fixed_ratio(15.0), snaps);
        CHECK(mass_balance(f) <= 1e-10);
    }
    SUBCASE("heterogeneous to t=1") {
        Rng rng(11);
        std::vector<double> v(256);
        for (double& vi : v) vi = rng.uniform(0.5, 2.0);
        const double snaps[] = {1.0};
        const SpaceTimeField f =
            fvm_solve(kTrivial, v, g, 1.0, TimeStepSpec::fixed_ratio(15.0), snaps);
        CHECK(mass_balance(f) <= 1e-10);
    }
}

TEST_CASE("discrete maximum principle") {
    Rng rng(21);
    const Grid1D g{128, 1.0};
    std::vector<double> v(128);
    for (double& vi : v) vi = rng.uniform(0.5, 2.0);
    const double snaps[] = {0.25, 0.5, 0.75, 1.0};
    const SpaceTimeField f =
        fvm_solve(kResidual, v, g, 1.0, TimeStepSpec::fixed_ratio(15.0), snaps);
    for (const auto& row : f.s)
        for (double s : row) {
            CHECK(s >= kResidual.s_init - 1e-12);
            CHECK(s <= kResidual.s_inj + 1e-12);
        }
}

TEST_CASE("probe series record the front passing") {
    const Grid1D g{128, 1.0};
    const std::vector<double> v(128, 1.0);
    ProbeRequest probes;
    probes.locations = {0.5};
    for (int i = 0; i <= 100; ++i) probes.times.push_back(i / 100.0);
    ProbeSeries series;
    const double snaps[] = {1.0};
    fvm_solve(kTrivial, v, g, 1.0, TimeStepSpec::fixed_ratio(15.0), snaps, &probes, &series);
    REQUIRE(series.s.size() == 1);
    REQUIRE(series.s[0].size() == series.times.size());
    // saturation at x=0.5 rises once the shock (t ~ 0.414) arrives
    CHECK(series.s[0].front() == kTrivial.s_init);
    CHECK(series.s[0].back() > 0.6);
}
