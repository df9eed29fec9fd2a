// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "popparts/encoder.hpp"
#include "popparts/tensor.hpp"

namespace popparts {

struct StageMaps {
    Tensor H, D, X, Y;
};

// Predicted maps: S stages of part maps plus a single global pose map.
struct StagePredictions {
    std::vector<StageMaps> stages;
    Tensor P;
};

struct LossBreakdown {
    double l_h = 0, l_d = 0, l_t = 0, l_p = 0;
    double total = 0;
};

// Multi-stage weighted L2 objective: unweighted heatmap term, Wd-weighted
// depth term, Wt-weighted displacement term, Wp-weighted global term. Plain
// sums, no normalization. Throws InvariantError naming the offending map on
// shape mismatch.
LossBreakdown total_loss(const StagePredictions& pred, const EncodedMaps& gt);

struct LossGradients {
    std::vector<StageMaps> stages;
    Tensor P;
};

// Analytic gradients w.r.t. every predicted map value:
// 2 * weight * (pred - gt), weight 1 for heatmaps.
LossGradients loss_gradients(const StagePredictions& pred,
                             const EncodedMaps& gt);

// Max normalized difference |analytic - central difference| /
// max(1, |analytic|, |fd|) over every entry. Step h in map value units.
double max_gradient_check_error(const StagePredictions& pred,
                                const EncodedMaps& gt, double h = 1e-4);

}  // namespace popparts
