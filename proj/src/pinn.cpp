#include "bluq/pinn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "bluq/errors.hpp"

namespace bluq {

void TrainingConfig::validate() const {
    std::string errs;
    auto add = [&errs](const std::string& e) {
        if (!errs.empty()) errs += "; ";
        errs += e;
    };
    if (depth < 1) add("depth must be >= 1");
    if (width < 1) add("width must be >= 1");
    if (n_samples < 1) add("n_samples must be >= 1");
    if (!(x_range.hi > x_range.lo)) add("x range is degenerate");
    if (!(t_range.hi > t_range.lo)) add("t range is degenerate");
    if (theta_ranges.empty()) add("at least one theta range is required");
    for (const Range& r : theta_ranges)
        if (!(r.hi > r.lo)) add("theta range is degenerate");
    if (!(diffusion_eps >= 0.0)) add("diffusion_eps must be >= 0");
    if (continuity_planes < 0) add("continuity_planes must be >= 0");
    if (optimizer.iterations < 1) add("optimizer iterations must be >= 1");
    if (!(optimizer.step > 0.0)) add("optimizer step must be > 0");
    if (resample_every < 0) add("resample_every must be >= 0");
    if (fourier.enabled && (fourier.features < 1 || !(fourier.scale > 0.0)))
        add("bad Fourier settings");
    if (!errs.empty()) throw ValidationError("TrainingConfig: " + errs);
}

InputNormalization TrainingConfig::normalization() const {
    InputNormalization norm;
    const int dim = input_dim();
    norm.lo.resize(dim);
    norm.hi.resize(dim);
    norm.lo(0) = x_range.lo;
    norm.hi(0) = x_range.hi;
    norm.lo(1) = t_range.lo;
    norm.hi(1) = t_range.hi;
    for (std::size_t j = 0; j < theta_ranges.size(); ++j) {
        norm.lo(2 + j) = theta_ranges[j].lo;
        norm.hi(2 + j) = theta_ranges[j].hi;
    }
    return norm;
}

SampleBatch draw_sample_batch(const TrainingConfig& cfg, Rng& rng) {
    cfg.validate();
    const int dim = cfg.input_dim();
    const int n = cfg.n_samples;
    SampleBatch batch;

    auto fill_theta = [&](Eigen::MatrixXd& m, int col) {
        for (std::size_t j = 0; j < cfg.theta_ranges.size(); ++j)
            m(2 + j, col) = rng.uniform(cfg.theta_ranges[j].lo, cfg.theta_ranges[j].hi);
    };

    batch.interior.resize(dim, n);
    for (int i = 0; i < n; ++i) {
        batch.interior(0, i) = rng.uniform(cfg.x_range.lo, cfg.x_range.hi);
        batch.interior(1, i) = rng.uniform(cfg.t_range.lo, cfg.t_range.hi);
        fill_theta(batch.interior, i);
    }
    batch.initial.resize(dim, n);
    for (int i = 0; i < n; ++i) {
        batch.initial(0, i) = rng.uniform(cfg.x_range.lo, cfg.x_range.hi);
        batch.initial(1, i) = 0.0;
        fill_theta(batch.initial, i);
    }
    batch.boundary.resize(dim, n);
    for (int i = 0; i < n; ++i) {
        batch.boundary(0, i) = 0.0;
        batch.boundary(1, i) = rng.uniform(cfg.t_range.lo, cfg.t_range.hi);
        fill_theta(batch.boundary, i);
    }
    if (cfg.continuity_planes > 0) {
        const int planes = cfg.continuity_planes;
        batch.planes.resize(dim, n);
        const double span = cfg.x_range.hi - cfg.x_range.lo;
        for (int i = 0; i < n; ++i) {
            const int plane = i % planes;
            batch.planes(0, i) = cfg.x_range.lo + span * (plane + 1) / (planes + 1);
            batch.planes(1, i) = rng.uniform(cfg.t_range.lo, cfg.t_range.hi);
            fill_theta(batch.planes, i);
        }
    }
    return batch;
}

namespace {

std::span<const double> theta_of(const Eigen::MatrixXd& cols, int i) {
    return {cols.col(i).data() + 2, static_cast<std::size_t>(cols.rows() - 2)};
}

struct SlopeEval {
    double g;  // hull slope at s
    double gp; // d(slope)/ds
};

// slope of the entropy-constrained flux at s, with the clamp folded in
SlopeEval hull_slope(double s, const HullModel& h, const FluidParams& p) {
    if (s <= h.s_bl) return {h.sigma, 0.0};
    if (s >= h.s_inj)
        return {fractional_flow_derivative(h.s_inj, p), 0.0};
    return {fractional_flow_derivative(s, p), fractional_flow_second_derivative(s, p)};
}

[[noreturn]] void throw_nan(const char* term, const Eigen::MatrixXd& cols, int i) {
    std::ostringstream os;
    os << "loss_terms: non-finite " << term << " at sample (x=" << cols(0, i)
       << ", t=" << cols(1, i) << ", theta=[";
    for (int j = 2; j < cols.rows(); ++j) {
        if (j > 2) os << ", ";
        os << cols(j, i);
    }
    os << "])";
    throw NumericalError(os.str());
}

LossTerms compute_losses(const MlpModel& m, const SampleBatch& batch, const FluidParams& p,
                         const TrainingConfig& cfg, const FieldContext& ctx,
                         ParamGrads* grads) {
    p.validate();
    if (!ctx.param) throw ValidationError("loss_terms: FieldContext.param is required");
    const bool corr = cfg.hull_mode == HullMode::VelocityCorrelated;
    if (corr && !ctx.hull_corr)
        throw ValidationError("loss_terms: velocity-correlated mode needs hull_corr");
    if (!corr && !ctx.hull) throw ValidationError("loss_terms: global hull is required");
    if (cfg.use_velocity_net && !ctx.velocity_net)
        throw ValidationError("loss_terms: use_velocity_net set but no net provided");

    LossTerms lt;

    auto velocities = [&](const Eigen::MatrixXd& cols) {
        const auto n = cols.cols();
        Eigen::VectorXd v(n);
        if (cfg.use_velocity_net) {
            const Eigen::MatrixXd xin = cols.row(0);
            const BatchOutputs vo = engine_forward(*ctx.velocity_net, xin, ChannelMask{});
            v = vo.y.row(0);
        } else {
            for (Eigen::Index i = 0; i < n; ++i)
                v(i) = ctx.param->velocity_at(cols(0, i), theta_of(cols, i));
        }
        return v;
    };
    auto slope_at = [&](double s, double v) -> SlopeEval {
        if (!corr) return hull_slope(s, *ctx.hull, p);
        const HullModel h = hull_from_correlation(*ctx.hull_corr, p, v);
        return hull_slope(s, h, p);
    };

    // ---- interior residual ----
    if (batch.interior.cols() > 0) {
        const auto n = batch.interior.cols();
        const bool use_xx = cfg.diffusion_eps > 0.0;
        ChannelMask mask{true, true, use_xx};
        EngineWorkspace ws;
        const BatchOutputs out = engine_forward(m, batch.interior, mask, grads ? &ws : nullptr);
        const Eigen::VectorXd v = velocities(batch.interior);

        BatchOutputs seed;
        if (grads) {
            seed.y.setZero(1, n);
            seed.yx.setZero(1, n);
            seed.yt.setZero(1, n);
            if (use_xx) seed.yxx.setZero(1, n);
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const double s = out.y(0, i);
            const double sx = out.yx(0, i);
            const double st = out.yt(0, i);
            const double sxx = use_xx ? out.yxx(0, i) : 0.0;
            const SlopeEval se = slope_at(s, v(i));
            const double r = st + v(i) * se.g * sx - cfg.diffusion_eps * sxx;
            if (!std::isfinite(r)) throw_nan("residual", batch.interior, i);
            const double w = cfg.weighted_residual ? 1.0 / (sx * sx + st * st + 1.0) : 1.0;
            lt.residual += w * r * r;
            if (grads) {
                const double two_wr = 2.0 * w * r;
                seed.y(0, i) = two_wr * v(i) * se.gp * sx;
                seed.yx(0, i) = two_wr * v(i) * se.g;
                seed.yt(0, i) = two_wr;
                if (cfg.weighted_residual) {
                    const double r2w2 = r * r * w * w;
                    seed.yx(0, i) += -2.0 * sx * r2w2;
                    seed.yt(0, i) += -2.0 * st * r2w2;
                }
                if (use_xx) seed.yxx(0, i) = -two_wr * cfg.diffusion_eps;
            }
        }
        if (grads) {
            seed.y *= cfg.w_residual;
            seed.yx *= cfg.w_residual;
            seed.yt *= cfg.w_residual;
            if (use_xx) seed.yxx *= cfg.w_residual;
            engine_backward(m, ws, seed, *grads);
        }
    }

    // ---- initial condition: value pulled to s_init plus d/dt penalty ----
    if (batch.initial.cols() > 0) {
        const auto n = batch.initial.cols();
        ChannelMask mask{false, true, false};
        EngineWorkspace ws;
        const BatchOutputs out = engine_forward(m, batch.initial, mask, grads ? &ws : nullptr);
        BatchOutputs seed;
        if (grads) {
            seed.y.setZero(1, n);
            seed.yt.setZero(1, n);
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const double ds = out.y(0, i) - p.s_init;
            const double st = out.yt(0, i);
            if (!std::isfinite(ds) || !std::isfinite(st)) throw_nan("initial term", batch.initial, i);
            lt.ic += ds * ds + st * st;
            if (grads) {
                seed.y(0, i) = 2.0 * ds * cfg.w_ic;
                seed.yt(0, i) = 2.0 * st * cfg.w_ic;
            }
        }
        if (grads) engine_backward(m, ws, seed, *grads);
    }

    // ---- inlet boundary: value pulled to s_inj ----
    if (batch.boundary.cols() > 0) {
        const auto n = batch.boundary.cols();
        EngineWorkspace ws;
        const BatchOutputs out = engine_forward(m, batch.boundary, ChannelMask{}, grads ? &ws : nullptr);
        BatchOutputs seed;
        if (grads) seed.y.setZero(1, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double ds = out.y(0, i) - p.s_inj;
            if (!std::isfinite(ds)) throw_nan("boundary term", batch.boundary, i);
            lt.bc += ds * ds;
            if (grads) seed.y(0, i) = 2.0 * ds * cfg.w_bc;
        }
        if (grads) engine_backward(m, ws, seed, *grads);
    }

    // ---- flux-consistency planes: (f'(S) - fhat'(S)) S_x driven to zero ----
    if (batch.planes.cols() > 0) {
        const auto n = batch.planes.cols();
        ChannelMask mask{true, false, false};
        EngineWorkspace ws;
        const BatchOutputs out = engine_forward(m, batch.planes, mask, grads ? &ws : nullptr);
        const Eigen::VectorXd v = velocities(batch.planes);
        BatchOutputs seed;
        if (grads) {
            seed.y.setZero(1, n);
            seed.yx.setZero(1, n);
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const double s = out.y(0, i);
            const double sx = out.yx(0, i);
            const SlopeEval se = slope_at(s, v(i));
            const double raw = fractional_flow_derivative(s, p);
            const double rawp = fractional_flow_second_derivative(s, p);
            const double gap = raw - se.g;
            const double term = gap * sx;
            if (!std::isfinite(term)) throw_nan("plane term", batch.planes, i);
            lt.planes += term * term;
            if (grads) {
                seed.y(0, i) = 2.0 * term * (rawp - se.gp) * sx * cfg.w_planes;
                seed.yx(0, i) = 2.0 * term * gap * cfg.w_planes;
            }
        }
        if (grads) engine_backward(m, ws, seed, *grads);
    }

    return lt;
}

} // namespace

LossTerms loss_terms(const MlpModel& m, const SampleBatch& batch, const FluidParams& p,
                     const TrainingConfig& cfg, const FieldContext& ctx) {
    return compute_losses(m, batch, p, cfg, ctx, nullptr);
}

LossTerms loss_and_gradients(const MlpModel& m, const SampleBatch& batch, const FluidParams& p,
                             const TrainingConfig& cfg, const FieldContext& ctx,
                             ParamGrads& grads) {
    return compute_losses(m, batch, p, cfg, ctx, &grads);
}

// ---- Adam ------------------------------------------------------------------

namespace {

struct AdamState {
    ParamGrads m1, m2;
    long t = 0;
};

void adam_block(Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& g,
                Eigen::Ref<Eigen::MatrixXd> m1, Eigen::Ref<Eigen::MatrixXd> m2, double bc1,
                double bc2, double step) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    m1 = b1 * m1 + (1.0 - b1) * g;
    m2 = (b2 * m2.array() + (1.0 - b2) * g.array().square()).matrix();
    param.array() -= step * (m1.array() / bc1) / ((m2.array() / bc2).sqrt() + eps);
}

void adam_step(MlpModel& model, const ParamGrads& g, AdamState& st, double step) {
    if (st.t == 0) {
        st.m1.set_zero_like(model);
        st.m2.set_zero_like(model);
    }
    ++st.t;
    const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(st.t));
    if (model.has_fourier())
        adam_block(model.fourier, g.d_fourier, st.m1.d_fourier, st.m2.d_fourier, bc1, bc2, step);
    for (std::size_t l = 0; l < model.w.size(); ++l) {
        adam_block(model.w[l], g.dw[l], st.m1.dw[l], st.m2.dw[l], bc1, bc2, step);
        adam_block(model.b[l], g.db[l], st.m1.db[l], st.m2.db[l], bc1, bc2, step);
    }
}

void clear_grads(ParamGrads& g) {
    g.d_fourier.setZero();
    for (auto& m : g.dw) m.setZero();
    for (auto& v : g.db) v.setZero();
}

} // namespace

TrainResult train(const TrainingConfig& cfg, const FluidParams& p,
                  const VelocityParameterization& param, const MlpModel* velocity_net,
                  const HullCorrelation* hull_corr) {
    cfg.validate();
    p.validate();
    if (param.param_count() != static_cast<int>(cfg.theta_ranges.size()))
        throw ValidationError("train: theta_ranges must match the parameterization dimension");
    if (cfg.use_velocity_net && !velocity_net)
        throw ValidationError("train: use_velocity_net set but no velocity net given");

    HullModel hull;
    FieldContext ctx;
    ctx.param = &param;
    ctx.velocity_net = velocity_net;
    if (cfg.hull_mode == HullMode::Global) {
        hull = welge_hull(p);
        ctx.hull = &hull;
    } else {
        if (!hull_corr) throw ValidationError("train: velocity-correlated mode needs a fitted correlation");
        ctx.hull_corr = hull_corr;
    }

    const std::uint64_t seed = cfg.optimizer.seed;
    TrainResult result;
    result.model = make_mlp(cfg.input_dim(), 1, cfg.depth, cfg.width, cfg.normalization(),
                            cfg.fourier, OutputMap::Linear, derive_stream(seed, 0));

    Rng batch_rng(derive_stream(seed, 1));
    SampleBatch batch = draw_sample_batch(cfg, batch_rng);

    ParamGrads grads;
    grads.set_zero_like(result.model);
    AdamState adam;
    double last_finite = 0.0;
    result.history.reserve(cfg.optimizer.iterations);

    for (int iter = 0; iter < cfg.optimizer.iterations; ++iter) {
        if (cfg.resample_every > 0 && iter > 0 && iter % cfg.resample_every == 0) {
            Rng rr(derive_stream(seed, 100 + iter / cfg.resample_every));
            batch = draw_sample_batch(cfg, rr);
        }
        clear_grads(grads);
        const LossTerms lt = loss_and_gradients(result.model, batch, p, cfg, ctx, grads);
        const double total = lt.weighted_total(cfg);
        if (!std::isfinite(total))
            throw TrainingDivergence("train: non-finite loss at iteration " + std::to_string(iter),
                                     iter - 1, last_finite);
        last_finite = total;
        result.history.push_back(lt);
        adam_step(result.model, grads, adam, cfg.optimizer.step);
    }
    return result;
}

SaturationProfile infer_profile(const MlpModel& m, std::span<const double> x, double t,
                                std::span<const double> theta) {
    if (static_cast<int>(theta.size()) + 2 != m.input_dim())
        throw ValidationError("infer_profile: theta size does not match the model");
    Eigen::MatrixXd inputs(m.input_dim(), static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        inputs(0, i) = x[i];
        inputs(1, i) = t;
        for (std::size_t j = 0; j < theta.size(); ++j) inputs(2 + j, i) = theta[j];
    }
    // support check (warn only)
    bool outside = false;
    if (t < m.norm.lo(1) - 1e-9 || t > m.norm.hi(1) + 1e-9) outside = true;
    for (std::size_t j = 0; j < theta.size(); ++j)
        if (theta[j] < m.norm.lo(2 + j) - 1e-9 || theta[j] > m.norm.hi(2 + j) + 1e-9)
            outside = true;
    if (outside)
        std::fprintf(stderr, "infer_profile: warning: query outside the training support\n");

    const BatchOutputs out = engine_forward(m, inputs, ChannelMask{});
    SaturationProfile prof;
    prof.t = t;
    prof.x.assign(x.begin(), x.end());
    prof.s.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        prof.s[i] = std::clamp(out.y(0, static_cast<Eigen::Index>(i)), 0.0, 1.0);
    return prof;
}

// ---- velocity-correlated hull -----------------------------------------------

std::vector<ShockObservation> collect_shock_observations(const SpaceTimeField& field,
                                                         std::span<const double> cell_velocities,
                                                         const FluidParams& p, double delta) {
    p.validate();
    if (cell_velocities.size() != field.x.size())
        throw ValidationError("collect_shock_observations: velocity/grid size mismatch");
    std::vector<ShockObservation> obs;
    const double thr = p.s_init + delta;
    const int n = static_cast<int>(field.x.size());
    for (std::size_t ti = 0; ti < field.t.size(); ++ti) {
        if (field.t[ti] <= 0.0) continue;
        const auto& s = field.s[ti];
        int front = -1;
        for (int i = n - 1; i >= 0; --i) {
            if (s[i] >= thr) {
                front = i;
                break;
            }
        }
        // need a resolved plateau behind the front and the front inside the domain
        if (front < 4 || front >= n - 1) continue;
        const double s_shock = s[front - 3];
        if (s_shock < p.s_init + 2.0 * delta) continue;
        obs.push_back({cell_velocities[front], s_shock});
    }
    return obs;
}

namespace {

struct LineFit {
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

LineFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
    const auto n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    LineFit fit;
    if (sxx <= 1e-14 * n) {
        // velocity has no spread: flat line through the mean
        fit.slope = 0.0;
        fit.intercept = my;
        fit.r2 = 0.0;
        return fit;
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

} // namespace

HullCorrelation fit_hull_correlation(std::span<const ShockObservation> obs,
                                     const FluidParams& p) {
    p.validate();
    if (obs.size() < 30)
        throw ValidationError("fit_hull_correlation: need >= 30 shock observations, got " +
                              std::to_string(obs.size()));
    std::vector<double> vs(obs.size()), ss(obs.size()), fs(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        vs[i] = obs[i].v;
        ss[i] = obs[i].s_shock;
        fs[i] = fractional_flow(obs[i].s_shock, p);
    }
    const LineFit fs_fit = linear_fit(vs, fs);
    const LineFit ss_fit = linear_fit(vs, ss);
    HullCorrelation c;
    c.alpha_s = ss_fit.slope;
    c.beta_s = ss_fit.intercept;
    c.alpha_f = fs_fit.slope;
    c.beta_f = fs_fit.intercept;
    c.r2_s = ss_fit.r2;
    c.r2_f = fs_fit.r2;
    return c;
}

HullModel hull_from_correlation(const HullCorrelation& c, const FluidParams& p, double v) {
    HullModel h;
    h.s_init = p.s_init;
    h.s_inj = p.s_inj;
    h.f_init = fractional_flow(p.s_init, p);
    h.f_inj = fractional_flow(p.s_inj, p);
    const double margin = 1e-6 * (p.s_inj - p.s_init);
    h.s_bl = std::clamp(c.alpha_s * v + c.beta_s, p.s_init + margin, p.s_inj);
    h.f_bl = std::max(c.alpha_f * v + c.beta_f, h.f_init + 1e-12);
    h.sigma = (h.f_bl - h.f_init) / (h.s_bl - h.s_init);
    return h;
}

// ---- auxiliary velocity network ----------------------------------------------

VelocityNetResult fit_velocity_net(std::span<const double> xs, std::span<const double> vs,
                                   int depth, int width, const FourierSettings& fourier,
                                   const OptimizerSettings& opt) {
    if (xs.size() != vs.size())
        throw ValidationError("fit_velocity_net: xs and vs must have equal length");
    if (xs.size() < 100)
        throw ValidationError("fit_velocity_net: need >= 100 samples, got " +
                              std::to_string(xs.size()));

    // deterministic split: every 5th point held out
    std::vector<double> xt, vt, xh, vh;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i % 5 == 4) {
            xh.push_back(xs[i]);
            vh.push_back(vs[i]);
        } else {
            xt.push_back(xs[i]);
            vt.push_back(vs[i]);
        }
    }

    InputNormalization norm;
    norm.lo.resize(1);
    norm.hi.resize(1);
    const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
    norm.lo(0) = *mn;
    norm.hi(0) = *mx > *mn ? *mx : *mn + 1.0;

    VelocityNetResult result;
    result.net = make_mlp(1, 1, depth, width, norm, fourier, OutputMap::Linear,
                          derive_stream(opt.seed, 0));

    Eigen::MatrixXd train_in(1, static_cast<Eigen::Index>(xt.size()));
    for (std::size_t i = 0; i < xt.size(); ++i) train_in(0, i) = xt[i];

    ParamGrads grads;
    grads.set_zero_like(result.net);
    AdamState adam;
    double first_loss = -1.0;
    result.loss_history.reserve(opt.iterations);

    for (int iter = 0; iter < opt.iterations; ++iter) {
        clear_grads(grads);
        EngineWorkspace ws;
        const BatchOutputs out = engine_forward(result.net, train_in, ChannelMask{}, &ws);
        BatchOutputs seed;
        seed.y.setZero(1, train_in.cols());
        double loss = 0.0;
        for (Eigen::Index i = 0; i < train_in.cols(); ++i) {
            const double d = out.y(0, i) - vt[static_cast<std::size_t>(i)];
            loss += d * d;
            seed.y(0, i) = 2.0 * d;
        }
        if (!std::isfinite(loss))
            throw TrainingDivergence("fit_velocity_net: non-finite loss", iter - 1,
                                     result.loss_history.empty() ? 0.0 : result.loss_history.back());
        if (first_loss < 0.0) first_loss = loss;
        if (loss > 10.0 * first_loss)
            throw TrainingDivergence("fit_velocity_net: loss grew past 10x its start", iter,
                                     loss);
        result.loss_history.push_back(loss);
        engine_backward(result.net, ws, seed, grads);
        adam_step(result.net, grads, adam, opt.step);
    }

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < xh.size(); ++i) {
        const double y = forward(result.net, std::span<const double>{&xh[i], 1});
        num += (y - vh[i]) * (y - vh[i]);
        den += vh[i] * vh[i];
    }
    result.holdout_rel_l2 = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    return result;
}

} // namespace bluq
