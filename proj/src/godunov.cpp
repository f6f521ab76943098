#include "bluq/godunov.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bluq/errors.hpp"

namespace bluq {

void Grid1D::validate() const {
    if (n_cells < 2) throw ValidationError("Grid1D: n_cells must be >= 2");
    if (!(x_max > 0.0)) throw ValidationError("Grid1D: x_max must be > 0");
}

std::vector<double> Grid1D::centers() const {
    std::vector<double> c(n_cells);
    for (int i = 0; i < n_cells; ++i) c[i] = center(i);
    return c;
}

double godunov_flux(const FluidParams& p, double s_left, double s_right) {
    p.validate();
    // f is monotone non-decreasing on the mobile range, so both the
    // min-over-increasing and max-over-decreasing branches reduce to f(s_left).
    return fractional_flow(s_left, p);
}

double max_flux_derivative(const FluidParams& p) {
    p.validate();
    const double lo = p.s_wc, hi = 1.0 - p.s_nr;
    const int n = 16384;
    double best = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double s = lo + (hi - lo) * i / n;
        best = std::max(best, fractional_flow_derivative(s, p));
    }
    return best;
}

namespace {

struct KahanAcc {
    double sum = 0.0, c = 0.0;
    void add(double x) {
        const double y = x - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

} // namespace

SpaceTimeField fvm_solve(const FluidParams& p, std::span<const double> v, const Grid1D& g,
                         double t_end, TimeStepSpec dt_rule,
                         std::span<const double> snapshots,
                         const ProbeRequest* probes, ProbeSeries* series_out) {
    p.validate();
    g.validate();
    if (static_cast<int>(v.size()) != g.n_cells)
        throw ValidationError("fvm_solve: velocity vector length must equal n_cells");
    for (double vi : v)
        if (!(vi > 0.0)) throw ValidationError("fvm_solve: all cell velocities must be > 0");
    if (!(t_end >= 0.0)) throw ValidationError("fvm_solve: t_end must be >= 0");

    const double dx = g.dx();
    const double v_max = *std::max_element(v.begin(), v.end());
    const double fp_max = max_flux_derivative(p);
    const double dt_cfl = dx / (v_max * fp_max);

    double dt_nominal;
    switch (dt_rule.kind) {
        case TimeStepSpec::Kind::FixedRatio: dt_nominal = dx / dt_rule.value; break;
        case TimeStepSpec::Kind::CflFraction: dt_nominal = dt_rule.value * dt_cfl; break;
        case TimeStepSpec::Kind::Explicit: dt_nominal = dt_rule.value; break;
        default: throw ValidationError("fvm_solve: bad dt rule");
    }
    if (!(dt_nominal > 0.0)) throw ValidationError("fvm_solve: dt must be > 0");
    if (dt_nominal > dt_cfl * (1.0 + 1e-12))
        throw ValidationError("fvm_solve: dt=" + std::to_string(dt_nominal) +
                              " violates the CFL bound " + std::to_string(dt_cfl));

    // local unchecked flux (params validated above); clamp keeps it total
    const double swc = p.s_wc, snr = p.s_nr, minv = 1.0 / p.m;
    auto flux = [swc, snr, minv, &p](double s) {
        s = std::clamp(s, swc, 1.0 - snr);
        const double a = s - swc;
        const double b = 1.0 - s - snr;
        const double num = a * a;
        return num / (num + b * b * minv);
    };

    const int n = g.n_cells;
    std::vector<double> s(n, p.s_init), comp(n, 0.0);
    std::vector<double> flux_left(n + 1, 0.0); // interface i sits left of cell i
    const double f_inj = flux(p.s_inj);

    // The transport form dS/dt + v(x) f'(S) dS/dx = 0 conserves S/v(x): with
    // a unit total rate q, 1/v is the porosity and q f the physical flux, so
    // the audit weighs storage by 1/v and the scheme telescopes exactly.
    std::vector<double> inv_v(n);
    for (int i = 0; i < n; ++i) inv_v[i] = 1.0 / v[i];
    auto weighted_storage = [&] {
        KahanAcc acc;
        for (int i = 0; i < n; ++i) acc.add(s[i] * inv_v[i]);
        return acc.sum * dx;
    };

    std::vector<double> snaps(snapshots.begin(), snapshots.end());
    std::sort(snaps.begin(), snaps.end());
    if (snaps.empty() || snaps.back() < t_end - 1e-12) snaps.push_back(t_end);

    SpaceTimeField out;
    out.x = g.centers();
    out.storage_initial = weighted_storage();

    std::size_t next_snap = 0;
    auto record_snaps = [&](double t_now) {
        while (next_snap < snaps.size() && snaps[next_snap] <= t_now + 1e-12) {
            out.t.push_back(t_now);
            out.s.push_back(s);
            ++next_snap;
        }
    };

    // probe bookkeeping
    std::vector<int> probe_cells;
    std::size_t next_probe = 0;
    if (probes && series_out) {
        series_out->locations = probes->locations;
        series_out->times.clear();
        series_out->s.assign(probes->locations.size(), {});
        for (double xloc : probes->locations) {
            int ci = static_cast<int>(xloc / dx);
            probe_cells.push_back(std::clamp(ci, 0, n - 1));
        }
    }
    auto record_probes = [&](double t_now) {
        if (!probes || !series_out) return;
        while (next_probe < probes->times.size() && probes->times[next_probe] <= t_now + 1e-12) {
            series_out->times.push_back(t_now);
            for (std::size_t pi = 0; pi < probe_cells.size(); ++pi)
                series_out->s[pi].push_back(s[probe_cells[pi]]);
            ++next_probe;
        }
    };

    record_snaps(0.0);
    record_probes(0.0);

    KahanAcc inflow, outflow;
    if (t_end > 0.0) {
        const long n_steps = std::max(1L, static_cast<long>(std::ceil(t_end / dt_nominal - 1e-12)));
        const double dt = t_end / static_cast<double>(n_steps);
        const double lam = dt / dx;

        for (long step = 0; step < n_steps; ++step) {
            flux_left[0] = f_inj;
            for (int i = 1; i <= n - 1; ++i) flux_left[i] = flux(s[i - 1]);
            flux_left[n] = flux(s[n - 1]);

            for (int i = 0; i < n; ++i) {
                const double delta = lam * v[i] * (flux_left[i] - flux_left[i + 1]);
                // Kahan-compensated cell update keeps the audit near roundoff
                const double y = delta - comp[i];
                const double t2 = s[i] + y;
                comp[i] = (t2 - s[i]) - y;
                s[i] = t2;
            }
            inflow.add(dt * flux_left[0]);
            outflow.add(dt * flux_left[n]);

            const double t_now = t_end * static_cast<double>(step + 1) / static_cast<double>(n_steps);
            record_snaps(t_now);
            record_probes(t_now);
        }
    }
    record_snaps(t_end); // no-op unless t_end == 0 or trailing duplicates remain

    out.inflow = inflow.sum;
    out.outflow = outflow.sum;
    out.storage_final = weighted_storage();
    return out;
}

double mass_balance(const SpaceTimeField& field) {
    if (field.inflow == 0.0) return 0.0;
    const double imbalance =
        field.inflow - field.outflow - (field.storage_final - field.storage_initial);
    return std::abs(imbalance) / field.inflow;
}

} // namespace bluq
