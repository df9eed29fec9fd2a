// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "popparts/core.hpp"
#include "popparts/geometry.hpp"

namespace popparts {

enum class Space { k2D, k3D };

struct MetricConfig {
    double pck2d_factor = 0.5;   // times head size
    double pck3d_thresh = 0.10;  // meters
    double match_iou = 0.4;
    double head_fallback = 10.0;  // pixels, degenerate head segment
    double bbox_margin = kDefaultBBoxMargin;

    void validate() const;
};

struct MatchResult {
    std::vector<int> pred_to_gt;  // -1 = unmatched
    std::vector<int> gt_to_pred;
};

// Greedy by descending prediction score: each prediction takes the
// unmatched GT with the highest IOU, provided it reaches match_iou.
// GT boxes derive from labeled parts. GTs without any labeled part are
// skipped.
MatchResult match_by_iou(std::span<const Detection> preds,
                         std::span<const Pose> gts, const MetricConfig& cfg);

struct SceneSample {
    std::vector<Detection> preds;
    std::vector<Pose> gts;
};

struct EvalReport {
    Space space = Space::k2D;
    std::vector<double> per_part_pck;  // -1 where the part has no GT
    double mean_pck = 0;
    std::vector<double> per_part_ap;
    double map = 0;
    std::size_t matched = 0, unmatched_preds = 0, missed_gts = 0;
};

// PCK and MPII-style mAP across a batch of scenes. Matching is per scene;
// AP ranks part predictions by detection score across the whole batch
// (ties: true positives first, then input order). A part is correct when
// its distance to the labeled GT part stays strictly under the threshold
// (2D: pck2d_factor * head size; 3D: pck3d_thresh after back-projection).
EvalReport evaluate(std::span<const SceneSample> scenes,
                    const Skeleton& skeleton, const CameraIntrinsics& cam,
                    const MetricConfig& cfg, Space space);

// Single-scene conveniences.
EvalReport pck(std::span<const Detection> preds, std::span<const Pose> gts,
               const Skeleton& skeleton, const CameraIntrinsics& cam,
               const MetricConfig& cfg, Space space);
EvalReport map_score(std::span<const Detection> preds,
                     std::span<const Pose> gts, const Skeleton& skeleton,
                     const CameraIntrinsics& cam, const MetricConfig& cfg,
                     Space space);

}  // namespace popparts
