#include "bluq/uq.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bluq/engine.hpp"
#include "bluq/errors.hpp"
#include "bluq/godunov.hpp"

namespace bluq {

namespace {

// piecewise-linear interpolation with constant extrapolation
double interp1(std::span<const double> xs, std::span<const double> ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const auto j = static_cast<std::size_t>(it - xs.begin());
    const double w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    return ys[j - 1] + w * (ys[j] - ys[j - 1]);
}

double scalar_velocity(const FieldSample& sample) {
    if (const auto* c = std::get_if<ConstantField>(&sample.field)) return c->v;
    throw ValidationError("MocForwardModel: needs a constant-in-space velocity field");
}

} // namespace

RealizationOutput MocForwardModel::evaluate(const FieldSample& sample,
                                            const EvalGrids& grids) const {
    const double v = scalar_velocity(sample);
    RealizationOutput out;
    out.profiles.resize(grids.t_anchors.size(), grids.x_profile.size());
    for (std::size_t ti = 0; ti < grids.t_anchors.size(); ++ti)
        for (std::size_t xi = 0; xi < grids.x_profile.size(); ++xi)
            out.profiles(ti, xi) = solver_.saturation(v, grids.x_profile[xi], grids.t_anchors[ti]);
    out.series.resize(grids.x_anchors.size(), grids.t_series.size());
    for (std::size_t li = 0; li < grids.x_anchors.size(); ++li)
        for (std::size_t ti = 0; ti < grids.t_series.size(); ++ti)
            out.series(li, ti) = solver_.saturation(v, grids.x_anchors[li], grids.t_series[ti]);
    return out;
}

RealizationOutput FvmForwardModel::evaluate(const FieldSample& sample,
                                            const EvalGrids& grids) const {
    if (static_cast<int>(sample.cell_values.size()) != g_.n_cells)
        throw ValidationError("FvmForwardModel: field sample not on the solver grid");
    const double t_last = std::max(grids.t_anchors.empty() ? 0.0 : grids.t_anchors.back(),
                                   grids.t_series.empty() ? 0.0 : grids.t_series.back());
    ProbeRequest probes{grids.x_anchors, grids.t_series};
    ProbeSeries series;
    const SpaceTimeField field =
        fvm_solve(p_, sample.cell_values, g_, t_last, dt_rule_, grids.t_anchors, &probes, &series);

    RealizationOutput out;
    out.profiles.resize(grids.t_anchors.size(), grids.x_profile.size());
    // map snapshots onto the anchors in order (fvm records them ascending)
    std::size_t si = 0;
    for (std::size_t ti = 0; ti < grids.t_anchors.size(); ++ti) {
        while (si + 1 < field.t.size() && field.t[si] + 1e-9 < grids.t_anchors[ti]) ++si;
        for (std::size_t xi = 0; xi < grids.x_profile.size(); ++xi)
            out.profiles(ti, xi) = interp1(field.x, field.s[si], grids.x_profile[xi]);
    }
    out.series.resize(grids.x_anchors.size(), grids.t_series.size());
    for (std::size_t li = 0; li < grids.x_anchors.size(); ++li)
        for (std::size_t ti = 0; ti < grids.t_series.size(); ++ti) {
            const double t = grids.t_series[ti];
            out.series(li, ti) =
                t <= series.times.back() ? interp1(series.times, series.s[li], t) : series.s[li].back();
        }
    return out;
}

RealizationOutput SurrogateForwardModel::evaluate(const FieldSample& sample,
                                                  const EvalGrids& grids) const {
    const bool pointwise = param_.kind == VelocityParameterization::Kind::PointwiseVelocity;
    const int dim = model_->input_dim();

    auto theta_at = [&](double x, std::vector<double>& theta) {
        if (pointwise) {
            theta.resize(1);
            theta[0] = eval_field(sample.field, x);
        } else {
            theta = sample.params;
        }
    };

    RealizationOutput out;
    std::vector<double> theta;
    {
        const auto nx = grids.x_profile.size();
        Eigen::MatrixXd inputs(dim, static_cast<Eigen::Index>(grids.t_anchors.size() * nx));
        Eigen::Index col = 0;
        for (double t : grids.t_anchors)
            for (double x : grids.x_profile) {
                theta_at(x, theta);
                inputs(0, col) = x;
                inputs(1, col) = t;
                for (std::size_t j = 0; j < theta.size(); ++j) inputs(2 + j, col) = theta[j];
                ++col;
            }
        const BatchOutputs res = engine_forward(*model_, inputs, ChannelMask{});
        out.profiles.resize(grids.t_anchors.size(), nx);
        col = 0;
        for (std::size_t ti = 0; ti < grids.t_anchors.size(); ++ti)
            for (std::size_t xi = 0; xi < nx; ++xi)
                out.profiles(ti, xi) = std::clamp(res.y(0, col++), 0.0, 1.0);
    }
    {
        const auto nt = grids.t_series.size();
        Eigen::MatrixXd inputs(dim, static_cast<Eigen::Index>(grids.x_anchors.size() * nt));
        Eigen::Index col = 0;
        for (double x : grids.x_anchors)
            for (double t : grids.t_series) {
                theta_at(x, theta);
                inputs(0, col) = x;
                inputs(1, col) = t;
                for (std::size_t j = 0; j < theta.size(); ++j) inputs(2 + j, col) = theta[j];
                ++col;
            }
        const BatchOutputs res = engine_forward(*model_, inputs, ChannelMask{});
        out.series.resize(grids.x_anchors.size(), nt);
        col = 0;
        for (std::size_t li = 0; li < grids.x_anchors.size(); ++li)
            for (std::size_t ti = 0; ti < nt; ++ti)
                out.series(li, ti) = std::clamp(res.y(0, col++), 0.0, 1.0);
    }
    return out;
}

std::vector<FieldSample> draw_fields(const FieldSampler& sampler, int n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("draw_fields: n must be >= 1");
    std::vector<FieldSample> fields;
    fields.reserve(n);
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_stream(seed, static_cast<std::uint64_t>(i)));
        fields.push_back(sampler(rng));
    }
    return fields;
}

Ensemble evaluate_ensemble(const ForwardModel& model, std::span<const FieldSample> fields,
                           const EvalGrids& grids, const std::string& scenario_id) {
    Ensemble ens;
    ens.scenario = scenario_id;
    ens.model_tag = model.tag();
    ens.grids = grids;
    ens.params.reserve(fields.size());
    ens.outputs.reserve(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
        try {
            ens.outputs.push_back(model.evaluate(fields[i], grids));
        } catch (const std::exception& e) {
            throw NumericalError("evaluate_ensemble: realization " + std::to_string(i) +
                                 " failed: " + e.what());
        }
        ens.params.push_back(fields[i].params);
    }
    return ens;
}

Ensemble run_ensemble(const ForwardModel& model, const FieldSampler& sampler, int n,
                      const EvalGrids& grids, std::uint64_t seed,
                      const std::string& scenario_id) {
    const auto fields = draw_fields(sampler, n, seed);
    return evaluate_ensemble(model, fields, grids, scenario_id);
}

// ---- QOIs -------------------------------------------------------------------

std::optional<double> front_radius(std::span<const double> x, std::span<const double> s,
                                   double s_init, double delta) {
    if (!(delta > 0.0)) throw ValidationError("front_radius: delta must be > 0");
    if (x.size() != s.size() || x.size() < 2)
        throw ValidationError("front_radius: bad profile");
    const double thr = s_init + delta;
    const auto n = x.size();
    std::size_t j = n; // first index from the right with s >= thr
    for (std::size_t i = n; i-- > 0;) {
        if (s[i] >= thr) {
            j = i;
            break;
        }
    }
    if (j == n) return std::nullopt;      // never rose above threshold
    if (j == n - 1) return std::nullopt;  // front beyond the window
    const double ds = s[j] - s[j + 1];
    if (ds <= 0.0) return x[j];
    const double w = (s[j] - thr) / ds;
    return x[j] + w * (x[j + 1] - x[j]);
}

std::optional<double> breakthrough_time(std::span<const double> t, std::span<const double> s,
                                        double s_init, double delta) {
    if (!(delta > 0.0)) throw ValidationError("breakthrough_time: delta must be > 0");
    if (t.size() != s.size() || t.empty())
        throw ValidationError("breakthrough_time: bad series");
    const double thr = s_init + delta;
    if (s[0] >= thr) return t[0];
    for (std::size_t k = 1; k < t.size(); ++k) {
        if (s[k] >= thr) {
            const double ds = s[k] - s[k - 1];
            if (ds <= 0.0) return t[k];
            const double w = (thr - s[k - 1]) / ds;
            return t[k - 1] + w * (t[k] - t[k - 1]);
        }
    }
    return std::nullopt;
}

QoiSamples extract_qoi(const Ensemble& ens, QoiKind kind, int anchor_index, double s_init,
                       double delta) {
    QoiSamples q;
    q.kind = kind;
    q.censored.resize(ens.outputs.size(), false);
    if (kind == QoiKind::FrontRadius) {
        q.anchor = ens.grids.t_anchors.at(anchor_index);
        for (std::size_t r = 0; r < ens.outputs.size(); ++r) {
            const auto& prof = ens.outputs[r].profiles;
            std::vector<double> s(prof.cols());
            for (Eigen::Index i = 0; i < prof.cols(); ++i) s[i] = prof(anchor_index, i);
            const auto val = front_radius(ens.grids.x_profile, s, s_init, delta);
            if (val)
                q.values.push_back(*val);
            else
                q.censored[r] = true;
        }
    } else {
        q.anchor = ens.grids.x_anchors.at(anchor_index);
        for (std::size_t r = 0; r < ens.outputs.size(); ++r) {
            const auto& ser = ens.outputs[r].series;
            std::vector<double> s(ser.cols());
            for (Eigen::Index i = 0; i < ser.cols(); ++i) s[i] = ser(anchor_index, i);
            const auto val = breakthrough_time(ens.grids.t_series, s, s_init, delta);
            if (val)
                q.values.push_back(*val);
            else
                q.censored[r] = true;
        }
    }
    q.censored_count = static_cast<int>(std::count(q.censored.begin(), q.censored.end(), true));
    return q;
}

// ---- distances ----------------------------------------------------------------

double wasserstein1(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ValidationError("wasserstein1: empty sample set");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    if (sa.size() == sb.size()) {
        // equal sizes: the ECDF area reduces to the mean order-statistic gap
        double acc = 0.0;
        for (std::size_t i = 0; i < sa.size(); ++i) acc += std::abs(sa[i] - sb[i]);
        return acc / static_cast<double>(sa.size());
    }
    // area between the two ECDFs, swept over the merged sample values
    double dist = 0.0;
    std::size_t ia = 0, ib = 0;
    double prev = 0.0;
    bool have_prev = false;
    const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
    while (ia < sa.size() || ib < sb.size()) {
        const double v = (ib >= sb.size() || (ia < sa.size() && sa[ia] <= sb[ib])) ? sa[ia] : sb[ib];
        if (have_prev && v > prev) {
            const double fa = static_cast<double>(ia) / na;
            const double fb = static_cast<double>(ib) / nb;
            dist += std::abs(fa - fb) * (v - prev);
        }
        while (ia < sa.size() && sa[ia] == v) ++ia;
        while (ib < sb.size() && sb[ib] == v) ++ib;
        prev = v;
        have_prev = true;
    }
    return dist;
}

namespace {

std::vector<double> normalized(std::span<const double> hist) {
    double total = 0.0;
    for (double h : hist) {
        if (h < 0.0) throw ValidationError("histogram mass must be >= 0");
        total += h;
    }
    if (!(total > 0.0)) throw ValidationError("histogram has no mass");
    std::vector<double> out(hist.begin(), hist.end());
    for (double& h : out) h /= total;
    return out;
}

} // namespace

double kl_divergence(std::span<const double> hist_ref, std::span<const double> hist_q) {
    if (hist_ref.size() != hist_q.size())
        throw ValidationError("kl_divergence: histograms need a common binning");
    const auto p = normalized(hist_ref);
    const auto q = normalized(hist_q);
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return kl;
}

double jsd(std::span<const double> hist_a, std::span<const double> hist_b) {
    if (hist_a.size() != hist_b.size())
        throw ValidationError("jsd: histograms need a common binning");
    const auto p = normalized(hist_a);
    const auto q = normalized(hist_b);
    std::vector<double> m(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
    return 0.5 * kl_divergence(p, m) + 0.5 * kl_divergence(q, m);
}

std::vector<double> histogram(std::span<const double> samples, int nbins, double lo, double hi) {
    if (nbins < 1 || !(hi > lo)) throw ValidationError("histogram: bad binning");
    std::vector<double> h(nbins, 0.0);
    if (samples.empty()) return h;
    for (double v : samples) {
        int bin = static_cast<int>((v - lo) / (hi - lo) * nbins);
        bin = std::clamp(bin, 0, nbins - 1);
        h[bin] += 1.0;
    }
    for (double& x : h) x /= static_cast<double>(samples.size());
    return h;
}

// ---- statistics -----------------------------------------------------------------

double quantile_linear(std::vector<double> values, double q) {
    if (values.empty()) throw ValidationError("quantile_linear: empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto j = static_cast<std::size_t>(pos);
    if (j + 1 >= values.size()) return values.back();
    const double w = pos - static_cast<double>(j);
    return values[j] * (1.0 - w) + values[j + 1] * w;
}

std::vector<EnvelopeCurves> envelope(const Ensemble& ens, double lo_pct, double hi_pct) {
    if (ens.size() < 2) throw ValidationError("envelope: need at least 2 realizations");
    std::vector<EnvelopeCurves> curves;
    const auto nx = ens.grids.x_profile.size();
    std::vector<double> column(ens.outputs.size());
    for (std::size_t ti = 0; ti < ens.grids.t_anchors.size(); ++ti) {
        EnvelopeCurves c;
        c.t = ens.grids.t_anchors[ti];
        c.x = ens.grids.x_profile;
        c.mean.resize(nx);
        c.p_lo.resize(nx);
        c.p_hi.resize(nx);
        for (std::size_t xi = 0; xi < nx; ++xi) {
            for (std::size_t r = 0; r < ens.outputs.size(); ++r)
                column[r] = ens.outputs[r].profiles(ti, xi);
            c.mean[xi] = std::accumulate(column.begin(), column.end(), 0.0) /
                         static_cast<double>(column.size());
            c.p_lo[xi] = quantile_linear(column, lo_pct / 100.0);
            c.p_hi[xi] = quantile_linear(column, hi_pct / 100.0);
        }
        curves.push_back(std::move(c));
    }
    return curves;
}

// ---- comparison -------------------------------------------------------------------

namespace {

QoiComparison compare_qoi(const Ensemble& ref, const Ensemble& test, QoiKind kind,
                          int n_anchors, double s_init, double delta, std::uint64_t seed) {
    QoiComparison out;
    out.kind = kind;
    const bool paired = ref.size() == test.size();
    double sum_model = 0.0, sum_unif = 0.0;
    int used = 0;

    for (int a = 0; a < n_anchors; ++a) {
        const QoiSamples qr = extract_qoi(ref, kind, a, s_init, delta);
        const QoiSamples qt = extract_qoi(test, kind, a, s_init, delta);

        AnchorComparison ac;
        ac.anchor = qr.anchor;
        ac.censored_ref = qr.censored_count;
        ac.censored_test = qt.censored_count;

        std::vector<double> vr, vt;
        if (paired) {
            // drop realizations censored in either member
            std::size_t ir = 0, it = 0;
            for (int r = 0; r < ref.size(); ++r) {
                const bool cr = qr.censored[r], ct = qt.censored[r];
                const double xr = cr ? 0.0 : qr.values[ir];
                const double xt = ct ? 0.0 : qt.values[it];
                if (!cr) ++ir;
                if (!ct) ++it;
                if (cr || ct) continue;
                vr.push_back(xr);
                vt.push_back(xt);
            }
        } else {
            vr = qr.values;
            vt = qt.values;
        }

        if (vr.empty() || vt.empty()) {
            ac.skipped = true;
            out.anchors.push_back(ac);
            continue;
        }

        ac.w1_model = wasserstein1(vr, vt);

        const auto [mn, mx] = std::minmax_element(vr.begin(), vr.end());
        std::vector<double> unif(vr.size());
        Rng rng(derive_stream(seed, static_cast<std::uint64_t>(kind == QoiKind::FrontRadius ? a : 1000 + a)));
        for (double& u : unif) u = rng.uniform(*mn, *mx);
        ac.w1_uniform = wasserstein1(vr, unif);

        double lo = std::min(*mn, *std::min_element(vt.begin(), vt.end()));
        double hi = std::max(*mx, *std::max_element(vt.begin(), vt.end()));
        if (!(hi > lo)) hi = lo + 1.0;
        const auto href = histogram(vr, 20, lo, hi);
        const auto htest = histogram(vt, 20, lo, hi);
        ac.kl = kl_divergence(href, htest);
        ac.jsd_value = jsd(href, htest);

        sum_model += ac.w1_model;
        sum_unif += ac.w1_uniform;
        ++used;
        out.anchors.push_back(ac);
    }

    if (used > 0) {
        out.avg_w1_model = sum_model / used;
        out.avg_w1_uniform = sum_unif / used;
        out.relative_difference = out.avg_w1_uniform > 0.0 ? out.avg_w1_model / out.avg_w1_uniform
                                                           : 0.0;
    }
    return out;
}

} // namespace

ComparisonReport compare(const Ensemble& reference, const Ensemble& test, const FluidParams& p,
                         double delta, std::uint64_t seed) {
    p.validate();
    if (reference.grids.t_anchors.size() != test.grids.t_anchors.size() ||
        reference.grids.x_anchors.size() != test.grids.x_anchors.size())
        throw ValidationError("compare: ensembles must share anchor grids");
    ComparisonReport report;
    report.front_radius =
        compare_qoi(reference, test, QoiKind::FrontRadius,
                    static_cast<int>(reference.grids.t_anchors.size()), p.s_init, delta, seed);
    report.breakthrough =
        compare_qoi(reference, test, QoiKind::Breakthrough,
                    static_cast<int>(reference.grids.x_anchors.size()), p.s_init, delta, seed);
    return report;
}

} // namespace bluq
