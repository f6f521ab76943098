#include "bluq/engine.hpp"

#include <cmath>
#include <numbers>

#include "bluq/errors.hpp"

namespace bluq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool has(const Eigen::MatrixXd& m) { return m.size() > 0; }

} // namespace

void ParamGrads::set_zero_like(const MlpModel& m) {
    d_fourier = Eigen::MatrixXd::Zero(m.fourier.rows(), m.fourier.cols());
    dw.resize(m.w.size());
    db.resize(m.b.size());
    for (std::size_t l = 0; l < m.w.size(); ++l) {
        dw[l] = Eigen::MatrixXd::Zero(m.w[l].rows(), m.w[l].cols());
        db[l] = Eigen::VectorXd::Zero(m.b[l].size());
    }
}

BatchOutputs engine_forward(const MlpModel& m, const Eigen::MatrixXd& inputs,
                            const ChannelMask& mask, EngineWorkspace* ws) {
    const int dim = m.input_dim();
    const auto n = inputs.cols();
    if (inputs.rows() != dim)
        throw ValidationError("engine_forward: input rows do not match model input_dim");
    if (mask.dt && dim < 2)
        throw ValidationError("engine_forward: dt channel requires input row 1");
    if (mask.dxx && !mask.dx)
        throw ValidationError("engine_forward: dxx channel requires dx");

    EngineWorkspace local;
    if (!ws) ws = &local;
    ws->mask = mask;

    // normalization to [0,1]
    Eigen::VectorXd inv_range = (m.norm.hi - m.norm.lo).cwiseInverse();
    ws->u = (inputs.colwise() - m.norm.lo).array().colwise() * inv_range.array();
    if (mask.dx) {
        ws->ux = Eigen::MatrixXd::Zero(dim, n);
        ws->ux.row(0).setConstant(inv_range(0));
    } else {
        ws->ux.resize(0, 0);
    }
    if (mask.dt) {
        ws->ut = Eigen::MatrixXd::Zero(dim, n);
        ws->ut.row(1).setConstant(inv_range(1));
    } else {
        ws->ut.resize(0, 0);
    }

    // Fourier feature stage (normalized input is affine in x, so the
    // pre-feature second derivative vanishes identically)
    const Eigen::MatrixXd* a = &ws->u;
    const Eigen::MatrixXd* adx = mask.dx ? &ws->ux : nullptr;
    const Eigen::MatrixXd* adt = mask.dt ? &ws->ut : nullptr;
    const Eigen::MatrixXd* adxx = nullptr;
    if (m.has_fourier()) {
        const auto f = m.fourier.rows();
        ws->psi.noalias() = kTwoPi * (m.fourier * ws->u);
        const Eigen::ArrayXXd c = ws->psi.array().cos();
        const Eigen::ArrayXXd s = ws->psi.array().sin();
        ws->feat.resize(2 * f, n);
        ws->feat.topRows(f) = c.matrix();
        ws->feat.bottomRows(f) = s.matrix();
        if (mask.dx) {
            ws->psix.noalias() = kTwoPi * (m.fourier * ws->ux);
            ws->featx.resize(2 * f, n);
            ws->featx.topRows(f) = (-s * ws->psix.array()).matrix();
            ws->featx.bottomRows(f) = (c * ws->psix.array()).matrix();
        }
        if (mask.dt) {
            ws->psit.noalias() = kTwoPi * (m.fourier * ws->ut);
            ws->featt.resize(2 * f, n);
            ws->featt.topRows(f) = (-s * ws->psit.array()).matrix();
            ws->featt.bottomRows(f) = (c * ws->psit.array()).matrix();
        }
        if (mask.dxx) {
            const Eigen::ArrayXXd px2 = ws->psix.array().square();
            ws->featxx.resize(2 * f, n);
            ws->featxx.topRows(f) = (-c * px2).matrix();
            ws->featxx.bottomRows(f) = (-s * px2).matrix();
            adxx = &ws->featxx;
        }
        a = &ws->feat;
        if (mask.dx) adx = &ws->featx;
        if (mask.dt) adt = &ws->featt;
    }

    // hidden tanh layers
    const int hidden = static_cast<int>(m.w.size()) - 1;
    ws->layers.resize(hidden);
    for (int l = 0; l < hidden; ++l) {
        LayerCache& lc = ws->layers[l];
        Eigen::MatrixXd z = (m.w[l] * (*a)).colwise() + m.b[l];
        lc.h = z.array().tanh().matrix();
        const Eigen::ArrayXXd s1 = 1.0 - lc.h.array().square();
        if (mask.dx) {
            lc.zx.noalias() = m.w[l] * (*adx);
            lc.hx = (s1 * lc.zx.array()).matrix();
        }
        if (mask.dt) {
            lc.zt.noalias() = m.w[l] * (*adt);
            lc.ht = (s1 * lc.zt.array()).matrix();
        }
        if (mask.dxx) {
            if (adxx)
                lc.zxx.noalias() = m.w[l] * (*adxx);
            else
                lc.zxx = Eigen::MatrixXd::Zero(lc.h.rows(), n);
            lc.hxx = (s1 * lc.zxx.array() -
                      2.0 * lc.h.array() * s1 * lc.zx.array().square())
                         .matrix();
            adxx = &lc.hxx;
        }
        a = &lc.h;
        if (mask.dx) adx = &lc.hx;
        if (mask.dt) adt = &lc.ht;
    }

    // affine output layer
    ws->oz = (m.w.back() * (*a)).colwise() + m.b.back();
    if (mask.dx) ws->ozx.noalias() = m.w.back() * (*adx);
    if (mask.dt) ws->ozt.noalias() = m.w.back() * (*adt);
    if (mask.dxx) {
        if (adxx)
            ws->ozxx.noalias() = m.w.back() * (*adxx);
        else
            ws->ozxx = Eigen::MatrixXd::Zero(ws->oz.rows(), n);
    }

    BatchOutputs out;
    if (m.output_map == OutputMap::Linear) {
        out.y = ws->oz;
        if (mask.dx) out.yx = ws->ozx;
        if (mask.dt) out.yt = ws->ozt;
        if (mask.dxx) out.yxx = ws->ozxx;
    } else {
        // row 0 linear, row 1 softplus
        out.y = ws->oz;
        const Eigen::ArrayXd z1 = ws->oz.row(1).transpose().array();
        Eigen::ArrayXd sp(n), sig(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double z = z1(i);
            sp(i) = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
            sig(i) = 1.0 / (1.0 + std::exp(-z));
        }
        out.y.row(1) = sp.transpose();
        if (mask.dx) {
            out.yx = ws->ozx;
            out.yx.row(1) = (sig * ws->ozx.row(1).transpose().array()).transpose();
        }
        if (mask.dt) {
            out.yt = ws->ozt;
            out.yt.row(1) = (sig * ws->ozt.row(1).transpose().array()).transpose();
        }
        if (mask.dxx) {
            const Eigen::ArrayXd sigp = sig * (1.0 - sig);
            out.yxx = ws->ozxx;
            out.yxx.row(1) = (sigp * ws->ozx.row(1).transpose().array().square() +
                              sig * ws->ozxx.row(1).transpose().array())
                                 .transpose();
        }
    }
    return out;
}

void engine_backward(const MlpModel& m, const EngineWorkspace& ws, const BatchOutputs& seed,
                     ParamGrads& grads) {
    const auto n = ws.u.cols();
    const int out_dim = m.output_dim();
    const ChannelMask& mask = ws.mask;

    auto zero_like = [n, out_dim]() { return Eigen::MatrixXd::Zero(out_dim, n); };

    // adjoints of the pre-map output channels
    Eigen::MatrixXd gz = has(seed.y) ? seed.y : zero_like();
    Eigen::MatrixXd gzx = has(seed.yx) ? seed.yx : Eigen::MatrixXd();
    Eigen::MatrixXd gzt = has(seed.yt) ? seed.yt : Eigen::MatrixXd();
    Eigen::MatrixXd gzxx = has(seed.yxx) ? seed.yxx : Eigen::MatrixXd();
    if ((has(gzx) && !mask.dx) || (has(gzt) && !mask.dt) || (has(gzxx) && !mask.dxx))
        throw ValidationError("engine_backward: seed channel missing from forward mask");
    if (has(gzxx) && !has(gzx))
        throw ValidationError("engine_backward: a yxx seed requires a yx seed");

    if (m.output_map == OutputMap::MeanStd) {
        // reverse the softplus row; linear row passes through
        const Eigen::ArrayXd z1 = ws.oz.row(1).transpose().array();
        Eigen::ArrayXd sig(n);
        for (Eigen::Index i = 0; i < n; ++i) sig(i) = 1.0 / (1.0 + std::exp(-z1(i)));
        const Eigen::ArrayXd sigp = sig * (1.0 - sig);
        const Eigen::ArrayXd sigpp = sigp * (1.0 - 2.0 * sig);

        Eigen::ArrayXd acc = sig * gz.row(1).transpose().array();
        if (has(gzx)) {
            const Eigen::ArrayXd zx1 = ws.ozx.row(1).transpose().array();
            acc += sigp * zx1 * gzx.row(1).transpose().array();
        }
        if (has(gzt)) {
            const Eigen::ArrayXd zt1 = ws.ozt.row(1).transpose().array();
            acc += sigp * zt1 * gzt.row(1).transpose().array();
        }
        if (has(gzxx)) {
            const Eigen::ArrayXd zx1 = ws.ozx.row(1).transpose().array();
            const Eigen::ArrayXd zxx1 = ws.ozxx.row(1).transpose().array();
            acc += (sigpp * zx1.square() + sigp * zxx1) * gzxx.row(1).transpose().array();
            Eigen::ArrayXd accx = sig * gzx.row(1).transpose().array() +
                                  2.0 * sigp * zx1 * gzxx.row(1).transpose().array();
            gzx.row(1) = accx.transpose();
        } else if (has(gzx)) {
            gzx.row(1) = (sig * gzx.row(1).transpose().array()).transpose();
        }
        gz.row(1) = acc.transpose();
        if (has(gzt)) gzt.row(1) = (sig * gzt.row(1).transpose().array()).transpose();
        if (has(gzxx)) gzxx.row(1) = (sig * gzxx.row(1).transpose().array()).transpose();
    }

    const int hidden = static_cast<int>(m.w.size()) - 1;

    // input channels of a given dense layer
    auto layer_inputs = [&](int l) {
        struct Ins {
            const Eigen::MatrixXd *a, *ax, *at, *axx;
        } ins{nullptr, nullptr, nullptr, nullptr};
        if (l > 0) {
            const LayerCache& p = ws.layers[l - 1];
            ins.a = &p.h;
            if (mask.dx) ins.ax = &p.hx;
            if (mask.dt) ins.at = &p.ht;
            if (mask.dxx) ins.axx = &p.hxx;
        } else if (m.has_fourier()) {
            ins.a = &ws.feat;
            if (mask.dx) ins.ax = &ws.featx;
            if (mask.dt) ins.at = &ws.featt;
            if (mask.dxx) ins.axx = &ws.featxx;
        } else {
            ins.a = &ws.u;
            if (mask.dx) ins.ax = &ws.ux;
            if (mask.dt) ins.at = &ws.ut;
            // raw-input second derivative is identically zero
        }
        return ins;
    };

    // output layer accumulation and propagation
    {
        const auto ins = layer_inputs(hidden);
        grads.dw.back().noalias() += gz * ins.a->transpose();
        if (has(gzx) && ins.ax) grads.dw.back().noalias() += gzx * ins.ax->transpose();
        if (has(gzt) && ins.at) grads.dw.back().noalias() += gzt * ins.at->transpose();
        if (has(gzxx) && ins.axx) grads.dw.back().noalias() += gzxx * ins.axx->transpose();
        grads.db.back() += gz.rowwise().sum();
    }
    Eigen::MatrixXd hb = m.w.back().transpose() * gz;
    Eigen::MatrixXd hbx = has(gzx) ? (m.w.back().transpose() * gzx).eval() : Eigen::MatrixXd();
    Eigen::MatrixXd hbt = has(gzt) ? (m.w.back().transpose() * gzt).eval() : Eigen::MatrixXd();
    Eigen::MatrixXd hbxx = has(gzxx) ? (m.w.back().transpose() * gzxx).eval() : Eigen::MatrixXd();

    for (int l = hidden - 1; l >= 0; --l) {
        const LayerCache& lc = ws.layers[l];
        const Eigen::ArrayXXd h = lc.h.array();
        const Eigen::ArrayXXd s1 = 1.0 - h.square();

        Eigen::ArrayXXd zb = s1 * hb.array();
        if (has(hbx)) zb += (-2.0 * h * s1 * lc.zx.array()) * hbx.array();
        if (has(hbt)) zb += (-2.0 * h * s1 * lc.zt.array()) * hbt.array();
        if (has(hbxx))
            zb += (-2.0 * h * s1 * lc.zxx.array() -
                   2.0 * s1 * (s1 - 2.0 * h.square()) * lc.zx.array().square()) *
                  hbxx.array();

        Eigen::MatrixXd zbx;
        if (has(hbx)) {
            Eigen::ArrayXXd t = s1 * hbx.array();
            if (has(hbxx)) t += (-4.0 * h * s1 * lc.zx.array()) * hbxx.array();
            zbx = t.matrix();
        }
        Eigen::MatrixXd zbt = has(hbt) ? (s1 * hbt.array()).matrix().eval() : Eigen::MatrixXd();
        Eigen::MatrixXd zbxx = has(hbxx) ? (s1 * hbxx.array()).matrix().eval() : Eigen::MatrixXd();
        Eigen::MatrixXd zbm = zb.matrix();

        const auto ins = layer_inputs(l);
        grads.dw[l].noalias() += zbm * ins.a->transpose();
        if (has(zbx) && ins.ax) grads.dw[l].noalias() += zbx * ins.ax->transpose();
        if (has(zbt) && ins.at) grads.dw[l].noalias() += zbt * ins.at->transpose();
        if (has(zbxx) && ins.axx) grads.dw[l].noalias() += zbxx * ins.axx->transpose();
        grads.db[l] += zbm.rowwise().sum();

        const bool propagate = l > 0 || m.has_fourier();
        if (!propagate) return;
        hb = m.w[l].transpose() * zbm;
        hbx = has(zbx) ? (m.w[l].transpose() * zbx).eval() : Eigen::MatrixXd();
        hbt = has(zbt) ? (m.w[l].transpose() * zbt).eval() : Eigen::MatrixXd();
        hbxx = has(zbxx) ? (m.w[l].transpose() * zbxx).eval() : Eigen::MatrixXd();
    }

    if (!m.has_fourier()) return;

    // Fourier stage: hb* are adjoints of the stacked [cos; sin] features
    const auto f = m.fourier.rows();
    const Eigen::ArrayXXd c = ws.psi.array().cos();
    const Eigen::ArrayXXd s = ws.psi.array().sin();
    const Eigen::ArrayXXd cb = hb.topRows(f).array();
    const Eigen::ArrayXXd sb = hb.bottomRows(f).array();

    Eigen::ArrayXXd psib = -s * cb + c * sb;
    Eigen::MatrixXd psibx, psibt;
    if (has(hbx)) {
        const Eigen::ArrayXXd cbx = hbx.topRows(f).array();
        const Eigen::ArrayXXd sbx = hbx.bottomRows(f).array();
        const Eigen::ArrayXXd px = ws.psix.array();
        psib += (-c * px) * cbx + (-s * px) * sbx;
        Eigen::ArrayXXd t = -s * cbx + c * sbx;
        if (has(hbxx)) {
            const Eigen::ArrayXXd cbxx = hbxx.topRows(f).array();
            const Eigen::ArrayXXd sbxx = hbxx.bottomRows(f).array();
            psib += (s * px.square()) * cbxx + (-c * px.square()) * sbxx;
            t += (-2.0 * c * px) * cbxx + (-2.0 * s * px) * sbxx;
        }
        psibx = t.matrix();
    }
    if (has(hbt)) {
        const Eigen::ArrayXXd cbt = hbt.topRows(f).array();
        const Eigen::ArrayXXd sbt = hbt.bottomRows(f).array();
        const Eigen::ArrayXXd pt = ws.psit.array();
        psib += (-c * pt) * cbt + (-s * pt) * sbt;
        psibt = (-s * cbt + c * sbt).matrix();
    }

    grads.d_fourier.noalias() += kTwoPi * (psib.matrix() * ws.u.transpose());
    if (has(psibx)) grads.d_fourier.noalias() += kTwoPi * (psibx * ws.ux.transpose());
    if (has(psibt)) grads.d_fourier.noalias() += kTwoPi * (psibt * ws.ut.transpose());
}

} // namespace bluq
