// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#include "popparts/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace popparts {

namespace {

double part_distance(const PartLabel& pred, const PartLabel& gt,
                     const CameraIntrinsics& cam, Space space) {
    if (space == Space::k2D) {
        return std::hypot(pred.x - gt.x, pred.y - gt.y);
    }
    const Point3D a = backproject(pred.x, pred.y, pred.z, cam);
    const Point3D b = backproject(gt.x, gt.y, gt.z, cam);
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                     (a.z - b.z) * (a.z - b.z));
}

double head_size(const Pose& gt, const Skeleton& skeleton,
                 const MetricConfig& cfg) {
    const auto& [h, n] = skeleton.head_pair;
    const PartLabel& ph = gt.parts[h];
    const PartLabel& pn = gt.parts[n];
    if (!ph.labeled || !pn.labeled) return cfg.head_fallback;
    const double d = std::hypot(ph.x - pn.x, ph.y - pn.y);
    return d < 1e-9 ? cfg.head_fallback : d;
}

struct ApItem {
    double score;
    bool tp;
};

// Area under the precision/recall curve with all-point interpolation.
// Items must already be ranked.
double average_precision(const std::vector<ApItem>& items, std::size_t total) {
    if (total == 0) return 0.0;
    // precision at each position, then a backward running max
    std::vector<double> prec(items.size());
    std::size_t tp = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].tp) ++tp;
        prec[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    }
    for (std::size_t i = items.size(); i-- > 1;)
        prec[i - 1] = std::max(prec[i - 1], prec[i]);
    double ap = 0;
    for (std::size_t i = 0; i < items.size(); ++i)
        if (items[i].tp) ap += prec[i] / static_cast<double>(total);
    return ap;
}

}  // namespace

void MetricConfig::validate() const {
    if (!(pck2d_factor > 0) || !(pck3d_thresh > 0) || !(head_fallback > 0))
        throw InvariantError("metrics: factors must be positive");
    if (match_iou < 0 || match_iou > 1)
        throw InvariantError("metrics: match_iou must lie in [0,1]");
}

MatchResult match_by_iou(std::span<const Detection> preds,
                         std::span<const Pose> gts, const MetricConfig& cfg) {
    cfg.validate();
    MatchResult res;
    res.pred_to_gt.assign(preds.size(), -1);
    res.gt_to_pred.assign(gts.size(), -1);

    std::vector<BBox> gt_boxes(gts.size());
    std::vector<bool> gt_usable(gts.size(), false);
    for (std::size_t g = 0; g < gts.size(); ++g) {
        if (!gts[g].has_labeled_part()) continue;
        gt_boxes[g] = bbox_from_pose(gts[g], cfg.bbox_margin);
        gt_usable[g] = true;
    }

    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         return preds[a].score > preds[b].score;
                     });
    for (std::size_t pi : order) {
        int best_g = -1;
        double best = -1.0;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (!gt_usable[g] || res.gt_to_pred[g] >= 0) continue;
            const double v = iou(preds[pi].bbox, gt_boxes[g]);
            if (v > best) {  // IOU ties keep the lower GT index
                best = v;
                best_g = static_cast<int>(g);
            }
        }
        if (best_g >= 0 && best >= cfg.match_iou) {
            res.pred_to_gt[pi] = best_g;
            res.gt_to_pred[best_g] = static_cast<int>(pi);
        }
    }
    return res;
}

EvalReport evaluate(std::span<const SceneSample> scenes,
                    const Skeleton& skeleton, const CameraIntrinsics& cam,
                    const MetricConfig& cfg, Space space) {
    skeleton.validate();
    cfg.validate();
    const std::size_t k = skeleton.k;

    std::vector<std::size_t> correct(k, 0), total(k, 0);
    std::vector<std::vector<ApItem>> ap_items(k);
    EvalReport rep;
    rep.space = space;

    for (const SceneSample& scene : scenes) {
        const MatchResult match = match_by_iou(scene.preds, scene.gts, cfg);
        for (int g2p : match.gt_to_pred)
            if (g2p < 0) ++rep.missed_gts;
        for (std::size_t g = 0; g < scene.gts.size(); ++g)
            if (match.gt_to_pred[g] >= 0) ++rep.matched;
        for (int p2g : match.pred_to_gt)
            if (p2g < 0) ++rep.unmatched_preds;

        // PCK denominators: every labeled GT part.
        for (const Pose& gt : scene.gts)
            for (std::size_t j = 0; j < k && j < gt.parts.size(); ++j)
                if (gt.parts[j].labeled) ++total[j];

        for (std::size_t pi = 0; pi < scene.preds.size(); ++pi) {
            const Detection& det = scene.preds[pi];
            const int gi = match.pred_to_gt[pi];
            const Pose* gt = gi >= 0 ? &scene.gts[gi] : nullptr;
            const double thresh2d =
                gt ? cfg.pck2d_factor * head_size(*gt, skeleton, cfg) : 0;
            for (std::size_t j = 0; j < k && j < det.pose.parts.size(); ++j) {
                const PartLabel& pp = det.pose.parts[j];
                if (!pp.labeled) continue;
                bool tp = false;
                if (gt && j < gt->parts.size() && gt->parts[j].labeled) {
                    const double d =
                        part_distance(pp, gt->parts[j], cam, space);
                    const double thresh =
                        space == Space::k2D ? thresh2d : cfg.pck3d_thresh;
                    tp = d < thresh;
                }
                if (tp) ++correct[j];
                ap_items[j].push_back({det.score, tp});
            }
        }
    }

    rep.per_part_pck.assign(k, -1.0);
    rep.per_part_ap.assign(k, -1.0);
    double pck_sum = 0, ap_sum = 0;
    std::size_t with_gt = 0;
    for (std::size_t j = 0; j < k; ++j) {
        if (total[j] == 0) continue;
        ++with_gt;
        rep.per_part_pck[j] =
            static_cast<double>(correct[j]) / static_cast<double>(total[j]);
        pck_sum += rep.per_part_pck[j];

        auto& items = ap_items[j];
        // Rank: score descending, true positives before false positives at
        // equal score, otherwise keep the accumulation (input) order.
        std::stable_sort(items.begin(), items.end(),
                         [](const ApItem& a, const ApItem& b) {
                             if (a.score != b.score) return a.score > b.score;
                             return a.tp && !b.tp;
                         });
        rep.per_part_ap[j] = average_precision(items, total[j]);
        ap_sum += rep.per_part_ap[j];
    }
    if (with_gt > 0) {
        rep.mean_pck = pck_sum / static_cast<double>(with_gt);
        rep.map = ap_sum / static_cast<double>(with_gt);
    }
    return rep;
}

EvalReport pck(std::span<const Detection> preds, std::span<const Pose> gts,
               const Skeleton& skeleton, const CameraIntrinsics& cam,
               const MetricConfig& cfg, Space space) {
    const SceneSample scene{{preds.begin(), preds.end()},
                            {gts.begin(), gts.end()}};
    return evaluate({&scene, 1}, skeleton, cam, cfg, space);
}

EvalReport map_score(std::span<const Detection> preds,
                     std::span<const Pose> gts, const Skeleton& skeleton,
                     const CameraIntrinsics& cam, const MetricConfig& cfg,
                     Space space) {
    return pck(preds, gts, skeleton, cam, cfg, space);
}

}  // namespace popparts
