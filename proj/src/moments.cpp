#include "bluq/moments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bluq/engine.hpp"
#include "bluq/errors.hpp"
#include "bluq/rng.hpp"

namespace bluq {

void MomentsConfig::validate() const {
    std::string errs;
    auto add = [&errs](const std::string& e) {
        if (!errs.empty()) errs += "; ";
        errs += e;
    };
    if (!(v_bar > 0.0)) add("v_bar must be > 0");
    if (!(sigma_y2 >= 0.0)) add("sigma_y2 must be >= 0");
    if (!(s > 0.0)) add("correlation length s must be > 0");
    if (!(t_end >= 0.0)) add("t_end must be >= 0");
    if (!errs.empty()) throw ValidationError("MomentsConfig: " + errs);
    grid.validate();
}

namespace {

// bracket of the covariance: e^-u (6/u^2 + 18/u^3 + 18/u^4) + 3/u^2 - 18/u^4
// and its antiderivative -e^-u (6/u^2 + 6/u^3) - 3/u + 6/u^3 + 2.
// Below kSeriesSwitch the closed forms cancel catastrophically, so Taylor
// series (validated against high-precision evaluation) take over.
constexpr double kSeriesSwitch = 0.25;

double cov_bracket(double u) {
    if (u < kSeriesSwitch) {
        const double c[] = {3.0 / 4.0,    -2.0 / 5.0,  1.0 / 8.0,    -1.0 / 35.0, 1.0 / 192.0,
                            -1.0 / 1260.0, 1.0 / 9600.0, -1.0 / 83160.0, 1.0 / 806400.0};
        double acc = 0.0, pw = 1.0;
        for (double ck : c) {
            acc += ck * pw;
            pw *= u;
        }
        return acc;
    }
    const double u2 = u * u, u3 = u2 * u, u4 = u2 * u2;
    return std::exp(-u) * (6.0 / u2 + 18.0 / u3 + 18.0 / u4) + 3.0 / u2 - 18.0 / u4;
}

double cov_bracket_integral(double u) {
    if (u < kSeriesSwitch) {
        const double c[] = {3.0 / 4.0,    -1.0 / 5.0,   1.0 / 24.0,    -1.0 / 140.0, 1.0 / 960.0,
                            -1.0 / 7560.0, 1.0 / 67200.0, -1.0 / 665280.0, 1.0 / 7257600.0};
        double acc = 0.0, pw = u;
        for (double ck : c) {
            acc += ck * pw;
            pw *= u;
        }
        return acc;
    }
    const double u2 = u * u, u3 = u2 * u;
    return -std::exp(-u) * (6.0 / u2 + 6.0 / u3) - 3.0 / u + 6.0 / u3 + 2.0;
}

} // namespace

double vxx(double x, const MomentsConfig& cfg) {
    cfg.validate();
    if (!(x > 0.0)) throw ValidationError("vxx: lag must be > 0");
    return 0.5 * cfg.v_bar * cfg.v_bar * cfg.sigma_y2 * cov_bracket(x / cfg.s);
}

double vxx_integral(double x, const MomentsConfig& cfg) {
    cfg.validate();
    if (!(x > 0.0)) throw ValidationError("vxx_integral: lag must be > 0");
    return 0.5 * cfg.v_bar * cfg.v_bar * cfg.sigma_y2 * cfg.s * cov_bracket_integral(x / cfg.s);
}

namespace {

// diffusion weight K(x) = vxx_integral(x) / v_bar, finite at x = 0
double diffusion_weight(double x, const MomentsConfig& cfg) {
    if (x <= 0.0) return 0.0;
    return 0.5 * cfg.v_bar * cfg.sigma_y2 * cfg.s * cov_bracket_integral(x / cfg.s);
}

double diffusion_weight_derivative(double x, const MomentsConfig& cfg) {
    if (x <= 0.0) x = 1e-300; // one-sided limit; bracket is finite at 0+
    return 0.5 * cfg.v_bar * cfg.sigma_y2 * cov_bracket(x / cfg.s);
}

// pointwise velocity fluctuation scale: sqrt(vxx(0+)) with bracket(0) = 3/4
double delta_v(const MomentsConfig& cfg) {
    return cfg.v_bar * std::sqrt(0.375 * cfg.sigma_y2);
}

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

double moments_fd_timestep(const MomentsConfig& cfg, const FluidParams& p) {
    cfg.validate();
    p.validate();
    const double dx = cfg.grid.dx();
    const double fp_max = max_flux_derivative(p);
    const HullModel hull = welge_hull(p);
    // the hull slope peaks at the chord, so sigma^2 bounds the f'^2 factor
    const double k_max = diffusion_weight(cfg.grid.x_max, cfg);
    const double d_max = hull.sigma * hull.sigma * k_max;
    const double bound = 1.0 / (cfg.v_bar * fp_max / dx + 2.0 * d_max / (dx * dx));
    return 0.8 * bound;
}

MomentsSolution moments_fd_solve(const MomentsConfig& cfg, const FluidParams& p) {
    cfg.validate();
    p.validate();
    const int n = cfg.grid.n_cells;
    const double dx = cfg.grid.dx();
    const HullModel hull = welge_hull(p);
    const double dv = delta_v(cfg);

    const double swc = p.s_wc, snr = p.s_nr, minv = 1.0 / p.m;
    auto flux = [swc, snr, minv](double s) {
        s = std::clamp(s, swc, 1.0 - snr);
        const double a = s - swc;
        const double b = 1.0 - s - snr;
        const double num = a * a;
        return num / (num + b * b * minv);
    };

    std::vector<double> kx(n); // diffusion weight at cell centers
    for (int i = 0; i < n; ++i) kx[i] = diffusion_weight(cfg.grid.center(i), cfg);

    std::vector<double> mu(n, p.s_init), mu_comp(n, 0.0);
    std::vector<double> sg(n, 0.0);
    const double f_inj = flux(p.s_inj);

    std::vector<double> snaps(cfg.snapshots);
    std::sort(snaps.begin(), snaps.end());
    if (snaps.empty() || snaps.back() < cfg.t_end - 1e-12) snaps.push_back(cfg.t_end);

    MomentsSolution out;
    out.provenance = MomentsSolution::Provenance::FD;
    out.x = cfg.grid.centers();

    std::size_t next_snap = 0;
    auto record = [&](double t_now) {
        while (next_snap < snaps.size() && snaps[next_snap] <= t_now + 1e-12) {
            out.t.push_back(t_now);
            out.mu.push_back(mu);
            std::vector<double> s_clip(sg);
            for (double& v : s_clip) v = std::max(v, 0.0);
            out.sigma.push_back(std::move(s_clip));
            ++next_snap;
        }
    };
    record(0.0);

    KahanAcc inflow, outflow;
    double storage0 = std::accumulate(mu.begin(), mu.end(), 0.0) * dx;

    if (cfg.t_end > 0.0) {
        const double dt_nominal = moments_fd_timestep(cfg, p);
        const long n_steps =
            std::max(1L, static_cast<long>(std::ceil(cfg.t_end / dt_nominal - 1e-12)));
        const double dt = cfg.t_end / static_cast<double>(n_steps);
        const double lam = dt / dx;

        std::vector<double> adv(n + 1), dif(n + 1), hslope(n), dcoef(n), sadv(n + 1), fm(n);
        for (long step = 0; step < n_steps; ++step) {
            for (int i = 0; i < n; ++i) {
                const HullEval he = hull_eval(hull, p, mu[i]);
                hslope[i] = he.slope;
                fm[i] = he.flux * mu[i];
                dcoef[i] = he.slope * he.slope * kx[i];
            }
            // mean: upwind raw flux + central diffusion
            adv[0] = cfg.v_bar * f_inj;
            for (int i = 1; i <= n - 1; ++i) adv[i] = cfg.v_bar * flux(mu[i - 1]);
            adv[n] = cfg.v_bar * flux(mu[n - 1]);
            dif[0] = 0.0; // inflow diffusion weight vanishes at x = 0
            for (int i = 1; i <= n - 1; ++i)
                dif[i] = 0.5 * (dcoef[i - 1] + dcoef[i]) * (mu[i] - mu[i - 1]) / dx;
            dif[n] = 0.0; // zero-gradient outflow
            // fluctuation: upwind transport with the hull speed + source
            sadv[0] = 0.0; // sigma pinned to zero at the inlet
            for (int i = 1; i <= n - 1; ++i) sadv[i] = cfg.v_bar * hslope[i - 1] * sg[i - 1];
            sadv[n] = cfg.v_bar * hslope[n - 1] * sg[n - 1];

            for (int i = 0; i < n; ++i) {
                const double delta =
                    lam * (adv[i] - adv[i + 1]) + lam * (dif[i + 1] - dif[i]);
                const double y = delta - mu_comp[i];
                const double t2 = mu[i] + y;
                mu_comp[i] = (t2 - mu[i]) - y;
                mu[i] = t2;
            }
            for (int i = 0; i < n; ++i) {
                const double fm_r = i + 1 < n ? fm[i + 1] : fm[n - 1];
                const double fm_l = i > 0 ? fm[i - 1] : flux(p.s_inj) * p.s_inj;
                const double source = -dv * (fm_r - fm_l) / (2.0 * dx);
                sg[i] += lam * (sadv[i] - sadv[i + 1]) + dt * source;
            }
            inflow.add(dt * (adv[0] - dif[0]));
            outflow.add(dt * (adv[n] - dif[n]));
            record(cfg.t_end * static_cast<double>(step + 1) / static_cast<double>(n_steps));
        }
    }
    record(cfg.t_end);

    const double storage1 = std::accumulate(mu.begin(), mu.end(), 0.0) * dx;
    out.mass_balance =
        inflow.sum > 0.0
            ? std::abs(inflow.sum - outflow.sum - (storage1 - storage0)) / inflow.sum
            : 0.0;
    return out;
}

// ---- PINN resolution ---------------------------------------------------------

MomentsPinnResult moments_pinn_train(const MomentsConfig& cfg, const FluidParams& p,
                                     const MomentsTrainingSettings& settings) {
    cfg.validate();
    p.validate();
    if (settings.n_samples < 1 || settings.depth < 1 || settings.width < 1)
        throw ValidationError("moments_pinn_train: bad training settings");

    const HullModel hull = welge_hull(p);
    const double dv = delta_v(cfg);
    const double vb = cfg.v_bar;

    InputNormalization norm;
    norm.lo.resize(2);
    norm.hi.resize(2);
    norm.lo << 0.0, 0.0;
    norm.hi << cfg.grid.x_max, std::max(cfg.t_end, 1e-6);

    const std::uint64_t seed = settings.optimizer.seed;
    MomentsPinnResult result;
    result.model = make_mlp(2, 2, settings.depth, settings.width, norm, settings.fourier,
                            OutputMap::MeanStd, derive_stream(seed, 0));

    // fixed sample set
    const int n = settings.n_samples;
    Rng rng(derive_stream(seed, 1));
    Eigen::MatrixXd interior(2, n), initial(2, n), boundary(2, n);
    for (int i = 0; i < n; ++i) {
        interior(0, i) = rng.uniform(0.0, cfg.grid.x_max);
        interior(1, i) = rng.uniform(0.0, cfg.t_end);
        initial(0, i) = rng.uniform(0.0, cfg.grid.x_max);
        initial(1, i) = 0.0;
        boundary(0, i) = 0.0;
        boundary(1, i) = rng.uniform(0.0, cfg.t_end);
    }
    std::vector<double> kw(n), kwp(n);
    for (int i = 0; i < n; ++i) {
        kw[i] = diffusion_weight(interior(0, i), cfg);
        kwp[i] = diffusion_weight_derivative(interior(0, i), cfg);
    }

    ParamGrads grads;
    grads.set_zero_like(result.model);
    struct Adam {
        ParamGrads m1, m2;
        long t = 0;
    } adam;
    adam.m1.set_zero_like(result.model);
    adam.m2.set_zero_like(result.model);
    auto adam_step = [&](double step) {
        ++adam.t;
        const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(adam.t));
        const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(adam.t));
        auto upd = [&](Eigen::Ref<Eigen::MatrixXd> w, const Eigen::MatrixXd& g,
                       Eigen::Ref<Eigen::MatrixXd> m1, Eigen::Ref<Eigen::MatrixXd> m2) {
            m1 = 0.9 * m1 + 0.1 * g;
            m2 = (0.999 * m2.array() + 0.001 * g.array().square()).matrix();
            w.array() -= step * (m1.array() / bc1) / ((m2.array() / bc2).sqrt() + 1e-8);
        };
        if (result.model.has_fourier())
            upd(result.model.fourier, grads.d_fourier, adam.m1.d_fourier, adam.m2.d_fourier);
        for (std::size_t l = 0; l < result.model.w.size(); ++l) {
            upd(result.model.w[l], grads.dw[l], adam.m1.dw[l], adam.m2.dw[l]);
            upd(result.model.b[l], grads.db[l], adam.m1.db[l], adam.m2.db[l]);
        }
    };

    double last_finite = 0.0;
    for (int iter = 0; iter < settings.optimizer.iterations; ++iter) {
        grads.d_fourier.setZero();
        for (auto& g : grads.dw) g.setZero();
        for (auto& g : grads.db) g.setZero();
        MomentsLossTerms lt;

        { // interior residuals
            ChannelMask mask{true, true, true};
            EngineWorkspace ws;
            const BatchOutputs out = engine_forward(result.model, interior, mask, &ws);
            BatchOutputs seed_m;
            seed_m.y.setZero(2, n);
            seed_m.yx.setZero(2, n);
            seed_m.yt.setZero(2, n);
            seed_m.yxx.setZero(2, n);
            for (int i = 0; i < n; ++i) {
                const double mu = out.y(0, i), mux = out.yx(0, i), mut = out.yt(0, i),
                             muxx = out.yxx(0, i);
                const double sgv = out.y(1, i), sgx = out.yx(1, i), sgt = out.yt(1, i);
                const HullEval he = hull_eval(hull, p, mu);
                const double g = he.slope;
                const double gp = hull_second_derivative(hull, p, mu);
                const double gpp = hull_third_derivative(hull, p, mu);
                const double fh = he.flux;
                const double K = kw[i], Kp = kwp[i];

                const double r_mu =
                    mut + vb * g * mux - (g * g * K * muxx + 2.0 * g * gp * K * mux * mux +
                                          g * g * Kp * mux);
                const double r_sg =
                    sgt + vb * (gp * mux * sgv + g * sgx) + dv * (g * mux * mu + fh * mux);
                if (!std::isfinite(r_mu) || !std::isfinite(r_sg))
                    throw NumericalError("moments_pinn_train: non-finite residual at (x=" +
                                         std::to_string(interior(0, i)) +
                                         ", t=" + std::to_string(interior(1, i)) + ")");
                lt.mu_residual += r_mu * r_mu;
                lt.sigma_residual += r_sg * r_sg;

                const double dmu = vb * gp * mux -
                                   (2.0 * g * gp * K * muxx +
                                    2.0 * (gp * gp + g * gpp) * K * mux * mux +
                                    2.0 * g * gp * Kp * mux);
                const double dmux = vb * g - (4.0 * g * gp * K * mux + g * g * Kp);
                const double smu = vb * (gpp * mux * sgv + gp * sgx) +
                                   dv * (gp * mux * mu + 2.0 * g * mux);
                const double smux = vb * gp * sgv + dv * (g * mu + fh);

                seed_m.y(0, i) = 2.0 * r_mu * dmu + 2.0 * r_sg * smu;
                seed_m.yx(0, i) = 2.0 * r_mu * dmux + 2.0 * r_sg * smux;
                seed_m.yt(0, i) = 2.0 * r_mu;
                seed_m.yxx(0, i) = 2.0 * r_mu * (-(g * g * K));
                seed_m.y(1, i) = 2.0 * r_sg * vb * gp * mux;
                seed_m.yx(1, i) = 2.0 * r_sg * vb * g;
                seed_m.yt(1, i) = 2.0 * r_sg;
            }
            engine_backward(result.model, ws, seed_m, grads);
        }
        { // initial condition: mu -> s_init, d mu/dt -> 0, sigma -> 0
            ChannelMask mask{false, true, false};
            EngineWorkspace ws;
            const BatchOutputs out = engine_forward(result.model, initial, mask, &ws);
            BatchOutputs seed_m;
            seed_m.y.setZero(2, n);
            seed_m.yt.setZero(2, n);
            for (int i = 0; i < n; ++i) {
                const double dmu = out.y(0, i) - p.s_init;
                const double mut = out.yt(0, i);
                const double sgv = out.y(1, i);
                lt.ic += dmu * dmu + mut * mut + sgv * sgv;
                seed_m.y(0, i) = 2.0 * dmu;
                seed_m.yt(0, i) = 2.0 * mut;
                seed_m.y(1, i) = 2.0 * sgv;
            }
            engine_backward(result.model, ws, seed_m, grads);
        }
        { // inlet: mu -> s_inj
            EngineWorkspace ws;
            const BatchOutputs out = engine_forward(result.model, boundary, ChannelMask{}, &ws);
            BatchOutputs seed_m;
            seed_m.y.setZero(2, n);
            for (int i = 0; i < n; ++i) {
                const double dmu = out.y(0, i) - p.s_inj;
                lt.bc += dmu * dmu;
                seed_m.y(0, i) = 2.0 * dmu;
            }
            engine_backward(result.model, ws, seed_m, grads);
        }

        if (!std::isfinite(lt.total()))
            throw TrainingDivergence("moments_pinn_train: non-finite loss at iteration " +
                                         std::to_string(iter),
                                     iter - 1, last_finite);
        last_finite = lt.total();
        result.history.push_back(lt);
        adam_step(settings.optimizer.step);
    }

    // evaluate on the configured lattice
    std::vector<double> snaps(cfg.snapshots);
    std::sort(snaps.begin(), snaps.end());
    if (snaps.empty() || snaps.back() < cfg.t_end - 1e-12) snaps.push_back(cfg.t_end);
    MomentsSolution& sol = result.solution;
    sol.provenance = MomentsSolution::Provenance::PINN;
    sol.x = cfg.grid.centers();
    const int nx = cfg.grid.n_cells;
    Eigen::MatrixXd inputs(2, nx);
    for (double t : snaps) {
        for (int i = 0; i < nx; ++i) {
            inputs(0, i) = sol.x[i];
            inputs(1, i) = t;
        }
        const BatchOutputs out = engine_forward(result.model, inputs, ChannelMask{});
        std::vector<double> mu(nx), sg(nx);
        for (int i = 0; i < nx; ++i) {
            mu[i] = std::clamp(out.y(0, i), 0.0, 1.0);
            sg[i] = out.y(1, i); // softplus head, already >= 0
        }
        sol.t.push_back(t);
        sol.mu.push_back(std::move(mu));
        sol.sigma.push_back(std::move(sg));
    }
    return result;
}

MomentsSolution moments_from_ensemble(const Ensemble& ens) {
    if (ens.size() < 2) throw ValidationError("moments_from_ensemble: need >= 2 realizations");
    MomentsSolution sol;
    sol.provenance = MomentsSolution::Provenance::MC;
    sol.x = ens.grids.x_profile;
    sol.t = ens.grids.t_anchors;
    const auto nr = static_cast<double>(ens.size());
    for (std::size_t ti = 0; ti < ens.grids.t_anchors.size(); ++ti) {
        std::vector<double> mu(sol.x.size()), sg(sol.x.size());
        for (std::size_t xi = 0; xi < sol.x.size(); ++xi) {
            double acc = 0.0, acc2 = 0.0;
            for (const auto& r : ens.outputs) {
                const double v = r.profiles(ti, xi);
                acc += v;
                acc2 += v * v;
            }
            const double mean = acc / nr;
            mu[xi] = mean;
            sg[xi] = std::sqrt(std::max(0.0, acc2 / nr - mean * mean));
        }
        sol.mu.push_back(std::move(mu));
        sol.sigma.push_back(std::move(sg));
    }
    return sol;
}

ErrorMetricsResult error_metrics(std::span<const double> y, std::span<const double> y_ref) {
    if (y.size() != y_ref.size() || y.empty())
        throw ValidationError("error_metrics: shape mismatch");
    ErrorMetricsResult out;
    out.e_std.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        out.e_std[i] = std::sqrt((y[i] - y_ref[i]) * (y[i] - y_ref[i]));
    const auto n = static_cast<double>(y.size());
    double my = 0.0, mr = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        my += y[i];
        mr += y_ref[i];
    }
    my /= n;
    mr /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sxy += (y[i] - my) * (y_ref[i] - mr);
        sxx += (y[i] - my) * (y[i] - my);
        syy += (y_ref[i] - mr) * (y_ref[i] - mr);
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        out.r_defined = false;
        out.r = 0.0;
    } else {
        out.r = sxy / (std::sqrt(sxx) * std::sqrt(syy));
    }
    return out;
}

} // namespace bluq
