// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#include "popparts/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace popparts {

namespace {

void require_shape(const Tensor& pred, const Tensor& gt, const char* name,
                   int stage) {
    if (pred.same_shape(gt)) return;
    std::string msg = "loss: map ";
    msg += name;
    if (stage >= 0) msg += " (stage " + std::to_string(stage + 1) + ")";
    msg += " shape mismatch: pred " + pred.shape_str() + " vs gt " +
           gt.shape_str();
    throw InvariantError(msg);
}

// sum of w * (p - g)^2, w == nullptr meaning unit weights
double weighted_sq(const Tensor& pred, const Tensor& gt, const Tensor* w) {
    double acc = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = pred[i] - gt[i];
        acc += (w ? (*w)[i] : 1.0) * r * r;
    }
    return acc;
}

void weighted_grad(const Tensor& pred, const Tensor& gt, const Tensor* w,
                   Tensor& out) {
    out = Tensor(pred.dims());
    for (std::size_t i = 0; i < pred.size(); ++i)
        out[i] = 2.0 * (w ? (*w)[i] : 1.0) * (pred[i] - gt[i]);
}

void check_shapes(const StagePredictions& pred, const EncodedMaps& gt) {
    if (pred.stages.empty())
        throw InvariantError("loss: need at least one stage");
    for (std::size_t s = 0; s < pred.stages.size(); ++s) {
        const int si = static_cast<int>(s);
        require_shape(pred.stages[s].H, gt.parts.H, "H", si);
        require_shape(pred.stages[s].D, gt.parts.D, "D", si);
        require_shape(pred.stages[s].X, gt.parts.X, "X", si);
        require_shape(pred.stages[s].Y, gt.parts.Y, "Y", si);
    }
    require_shape(pred.P, gt.global.P, "P", -1);
}

}  // namespace

LossBreakdown total_loss(const StagePredictions& pred, const EncodedMaps& gt) {
    check_shapes(pred, gt);
    LossBreakdown out;
    for (const StageMaps& st : pred.stages) {
        out.l_h += weighted_sq(st.H, gt.parts.H, nullptr);
        out.l_d += weighted_sq(st.D, gt.parts.D, &gt.parts.Wd);
        out.l_t += weighted_sq(st.X, gt.parts.X, &gt.parts.Wt) +
                   weighted_sq(st.Y, gt.parts.Y, &gt.parts.Wt);
    }
    out.l_p = weighted_sq(pred.P, gt.global.P, &gt.global.Wp);
    out.total = out.l_h + out.l_d + out.l_t + out.l_p;
    return out;
}

LossGradients loss_gradients(const StagePredictions& pred,
                             const EncodedMaps& gt) {
    check_shapes(pred, gt);
    LossGradients out;
    out.stages.resize(pred.stages.size());
    for (std::size_t s = 0; s < pred.stages.size(); ++s) {
        weighted_grad(pred.stages[s].H, gt.parts.H, nullptr, out.stages[s].H);
        weighted_grad(pred.stages[s].D, gt.parts.D, &gt.parts.Wd,
                      out.stages[s].D);
        weighted_grad(pred.stages[s].X, gt.parts.X, &gt.parts.Wt,
                      out.stages[s].X);
        weighted_grad(pred.stages[s].Y, gt.parts.Y, &gt.parts.Wt,
                      out.stages[s].Y);
    }
    weighted_grad(pred.P, gt.global.P, &gt.global.Wp, out.P);
    return out;
}

double max_gradient_check_error(const StagePredictions& pred,
                                const EncodedMaps& gt, double h) {
    const LossGradients grads = loss_gradients(pred, gt);
    StagePredictions probe = pred;

    double worst = 0;
    auto check_entry = [&](double* slot, double analytic) {
        const double saved = *slot;
        *slot = saved + h;
        const double hi = total_loss(probe, gt).total;
        *slot = saved - h;
        const double lo = total_loss(probe, gt).total;
        *slot = saved;
        const double fd = (hi - lo) / (2 * h);
        const double denom =
            std::max({1.0, std::abs(analytic), std::abs(fd)});
        worst = std::max(worst, std::abs(analytic - fd) / denom);
    };

    for (std::size_t s = 0; s < probe.stages.size(); ++s) {
        StageMaps& st = probe.stages[s];
        const StageMaps& gs = grads.stages[s];
        for (std::size_t i = 0; i < st.H.size(); ++i)
            check_entry(&st.H[i], gs.H[i]);
        for (std::size_t i = 0; i < st.D.size(); ++i)
            check_entry(&st.D[i], gs.D[i]);
        for (std::size_t i = 0; i < st.X.size(); ++i)
            check_entry(&st.X[i], gs.X[i]);
        for (std::size_t i = 0; i < st.Y.size(); ++i)
            check_entry(&st.Y[i], gs.Y[i]);
    }
    for (std::size_t i = 0; i < probe.P.size(); ++i)
        check_entry(&probe.P[i], grads.P[i]);
    return worst;
}

}  // namespace popparts
