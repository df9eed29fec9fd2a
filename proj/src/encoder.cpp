// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#include "popparts/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace popparts {

namespace {

struct Instance {
    double gx, gy;  // grid units
    double z;       // meters
};

// Labeled instances of part j in pose order; positions in grid units.
std::vector<Instance> collect_instances(std::span<const Pose> poses, int j,
                                        int stride) {
    std::vector<Instance> out;
    for (const Pose& pose : poses) {
        if (static_cast<std::size_t>(j) >= pose.parts.size()) continue;
        const PartLabel& p = pose.parts[j];
        if (!p.labeled) continue;
        out.push_back({p.x / stride, p.y / stride, p.z});
    }
    return out;
}

}  // namespace

void EncoderConfig::validate() const {
    if (!(sigma > 0)) throw InvariantError("encoder: sigma must be positive");
    if (!(truncation_radius >= 1))
        throw InvariantError("encoder: truncation radius must be >= 1");
    if (disk_radius < 0)
        throw InvariantError("encoder: disk radius must be >= 0");
    if (anchors.empty()) throw InvariantError("encoder: anchor list empty");
    for (const auto& [w, h] : anchors)
        if (!(w > 0) || !(h > 0))
            throw InvariantError("encoder: anchor sides must be positive");
}

Tensor encode_heatmaps(std::span<const Pose> poses, const GridSpec& grid,
                       const EncoderConfig& cfg, std::size_t k) {
    Tensor H({k + 1, static_cast<std::size_t>(grid.gh),
              static_cast<std::size_t>(grid.gw)});
    const double inv2s2 = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
    for (std::size_t j = 0; j < k; ++j) {
        const auto inst = collect_instances(poses, static_cast<int>(j),
                                            grid.stride);
        if (inst.empty()) continue;
        for (int v = 0; v < grid.gh; ++v) {
            for (int u = 0; u < grid.gw; ++u) {
                double best = 0.0;
                for (const Instance& q : inst) {
                    const double dx = q.gx - u;
                    const double dy = q.gy - v;
                    const double g = std::exp(-(dx * dx + dy * dy) * inv2s2);
                    best = std::max(best, g);
                }
                H(j, v, u) = best;
            }
        }
    }
    for (int v = 0; v < grid.gh; ++v) {
        for (int u = 0; u < grid.gw; ++u) {
            double m = 0.0;
            for (std::size_t j = 0; j < k; ++j) m = std::max(m, H(j, v, u));
            H(k, v, u) = 1.0 - m;
        }
    }
    return H;
}

DepthEncoding encode_part_depth(std::span<const Pose> poses,
                                const DepthImage& raw, const GridSpec& grid,
                                const EncoderConfig& cfg, std::size_t k) {
    const std::size_t gh = grid.gh, gw = grid.gw;
    DepthEncoding out{Tensor({k, gh, gw}), Tensor({k, gh, gw}, cfg.bg_weight)};

    // Base layer: nearest-neighbor downsample of the raw depth, meters.
    Tensor base({gh, gw});
    for (int v = 0; v < grid.gh; ++v) {
        for (int u = 0; u < grid.gw; ++u) {
            const int px = std::min(u * grid.stride, raw.width - 1);
            const int py = std::min(v * grid.stride, raw.height - 1);
            const double mm = raw.in_bounds(px, py) ? raw.at(px, py) : 0.0;
            base(v, u) = mm / 1000.0;
        }
    }
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < gh * gw; ++i)
            out.D[j * gh * gw + i] = base[i];

    const double r2 = cfg.disk_radius * cfg.disk_radius;
    for (std::size_t j = 0; j < k; ++j) {
        const auto inst = collect_instances(poses, static_cast<int>(j),
                                            grid.stride);
        for (const Instance& q : inst) {
            const int u_lo = std::max(0, static_cast<int>(
                                             std::ceil(q.gx - cfg.disk_radius)));
            const int u_hi = std::min(grid.gw - 1,
                                      static_cast<int>(std::floor(
                                          q.gx + cfg.disk_radius)));
            const int v_lo = std::max(0, static_cast<int>(
                                             std::ceil(q.gy - cfg.disk_radius)));
            const int v_hi = std::min(grid.gh - 1,
                                      static_cast<int>(std::floor(
                                          q.gy + cfg.disk_radius)));
            for (int v = v_lo; v <= v_hi; ++v) {
                for (int u = u_lo; u <= u_hi; ++u) {
                    const double dx = q.gx - u;
                    const double dy = q.gy - v;
                    if (dx * dx + dy * dy > r2) continue;
                    if (out.Wd(j, v, u) == cfg.fg_weight) {
                        // z-buffer: keep the nearer instance
                        out.D(j, v, u) = std::min(out.D(j, v, u), q.z);
                    } else {
                        out.D(j, v, u) = q.z;
                        out.Wd(j, v, u) = cfg.fg_weight;
                    }
                }
            }
        }
    }
    return out;
}

TpdfEncoding encode_tpdf(std::span<const Pose> poses, const GridSpec& grid,
                         const EncoderConfig& cfg, std::size_t k) {
    const std::size_t gh = grid.gh, gw = grid.gw;
    TpdfEncoding out{Tensor({k, gh, gw}), Tensor({k, gh, gw}),
                     Tensor({k, gh, gw})};
    const double r2 = cfg.truncation_radius * cfg.truncation_radius;
    for (std::size_t j = 0; j < k; ++j) {
        const auto inst = collect_instances(poses, static_cast<int>(j),
                                            grid.stride);
        if (inst.empty()) continue;
        for (int v = 0; v < grid.gh; ++v) {
            for (int u = 0; u < grid.gw; ++u) {
                int best = -1;
                double best_d2 = std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < inst.size(); ++i) {
                    const double dx = inst[i].gx - u;
                    const double dy = inst[i].gy - v;
                    const double d2 = dx * dx + dy * dy;
                    if (d2 < best_d2) {  // strict: ties keep the lowest index
                        best_d2 = d2;
                        best = static_cast<int>(i);
                    }
                }
                if (best >= 0 && best_d2 <= r2) {
                    out.X(j, v, u) = inst[best].gx - u;
                    out.Y(j, v, u) = inst[best].gy - v;
                    out.Wt(j, v, u) = 1.0;
                }
            }
        }
    }
    return out;
}

std::vector<int> assign_visibility(const Pose& pose, const Tensor& depth_maps,
                                   const GridSpec& grid8, double tol) {
    std::vector<int> v(pose.parts.size(), 1);
    for (std::size_t j = 0; j < pose.parts.size(); ++j) {
        const PartLabel& p = pose.parts[j];
        if (!p.labeled) continue;  // no label -> v stays 1
        const int u = static_cast<int>(std::lround(p.x / grid8.stride));
        const int w = static_cast<int>(std::lround(p.y / grid8.stride));
        if (!grid8.contains(u, w)) continue;  // outside grid -> v stays 1
        const double d = depth_maps(j, w, u);
        v[j] = std::abs(p.z - d) > tol ? 1 : 0;
    }
    return v;
}

GlobalEncoding encode_global_pose_map(std::span<const Pose> poses,
                                      const GridSpec& grid16,
                                      const EncoderConfig& cfg,
                                      const Tensor& depth_maps,
                                      const GridSpec& grid8, std::size_t k) {
    cfg.validate();
    GlobalEncoding out;
    GlobalPoseMap& gp = out.map;
    gp.grid = grid16;
    gp.k = k;
    gp.anchors = cfg.anchors;
    const std::size_t a_count = cfg.anchors.size();
    const std::size_t ch = gp.channels();
    gp.P = Tensor({a_count, ch, static_cast<std::size_t>(grid16.gh),
                   static_cast<std::size_t>(grid16.gw)});
    gp.Wp = Tensor(gp.P.dims());
    // Objectness is a detection task: every cell carries bg_weight there.
    for (std::size_t a = 0; a < a_count; ++a)
        for (int v = 0; v < grid16.gh; ++v)
            for (int u = 0; u < grid16.gw; ++u)
                gp.Wp(a, GlobalPoseMap::kObj, v, u) = cfg.bg_weight;

    // (cell, anchor) -> (pose index, bbox area)
    std::map<std::pair<int, std::size_t>, std::pair<std::size_t, double>> taken;

    for (std::size_t pi = 0; pi < poses.size(); ++pi) {
        const Pose& pose = poses[pi];
        if (!pose.has_labeled_part()) {
            ++out.dropped;
            continue;
        }
        const BBox box = bbox_from_pose(pose, cfg.bbox_margin);
        const double cx_g = box.center_x() / grid16.stride;
        const double cy_g = box.center_y() / grid16.stride;
        const int cu = static_cast<int>(std::floor(cx_g));
        const int cv = static_cast<int>(std::floor(cy_g));
        if (!grid16.contains(cu, cv)) {
            ++out.dropped;
            continue;
        }
        const double bw = box.width() / grid16.stride;
        const double bh = box.height() / grid16.stride;

        // Best-IOU anchor, anchor box centered on the cell center.
        const double acx = cu + 0.5, acy = cv + 0.5;
        const BBox gt_g{box.x_min / grid16.stride, box.y_min / grid16.stride,
                        box.x_max / grid16.stride, box.y_max / grid16.stride};
        std::size_t best_a = 0;
        double best_iou = -1.0;
        for (std::size_t a = 0; a < a_count; ++a) {
            const auto& [aw, ah] = cfg.anchors[a];
            const BBox ab{acx - aw / 2, acy - ah / 2, acx + aw / 2,
                          acy + ah / 2};
            const double v = iou(gt_g, ab);
            if (v > best_iou) {
                best_iou = v;
                best_a = a;
            }
        }

        const auto key = std::make_pair(cv * grid16.gw + cu, best_a);
        const double area = box.area();
        auto it = taken.find(key);
        if (it != taken.end()) {
            ++out.collisions;
            if (area <= it->second.second) continue;  // keep the larger pose
        }
        taken[key] = {pi, area};

        const auto vis = assign_visibility(pose, depth_maps, grid8,
                                           cfg.visibility_tol);
        const auto& [aw, ah] = cfg.anchors[best_a];
        gp.P(best_a, GlobalPoseMap::kTx, cv, cu) = cx_g - cu;
        gp.P(best_a, GlobalPoseMap::kTy, cv, cu) = cy_g - cv;
        gp.P(best_a, GlobalPoseMap::kTw, cv, cu) = std::log(bw / aw);
        gp.P(best_a, GlobalPoseMap::kTh, cv, cu) = std::log(bh / ah);
        gp.P(best_a, GlobalPoseMap::kObj, cv, cu) = 1.0;
        gp.Wp(best_a, GlobalPoseMap::kObj, cv, cu) = cfg.fg_weight;
        for (int c = 0; c < 4; ++c)
            gp.Wp(best_a, c, cv, cu) = 1.0;
        for (std::size_t j = 0; j < k; ++j) {
            const PartLabel& p =
                j < pose.parts.size() ? pose.parts[j] : PartLabel{};
            double dx = 0, dy = 0, z = 0;
            int v_flag = 1;
            if (p.labeled) {
                dx = p.x / grid16.stride - (cu + 0.5);
                dy = p.y / grid16.stride - (cv + 0.5);
                z = p.z;
                v_flag = vis[j];
            }
            const int ji = static_cast<int>(j);
            gp.P(best_a, GlobalPoseMap::part_channel(ji, 0), cv, cu) = dx;
            gp.P(best_a, GlobalPoseMap::part_channel(ji, 1), cv, cu) = dy;
            gp.P(best_a, GlobalPoseMap::part_channel(ji, 2), cv, cu) = z;
            gp.P(best_a, GlobalPoseMap::part_channel(ji, 3), cv, cu) = v_flag;
            for (int attr = 0; attr < 4; ++attr)
                gp.Wp(best_a, GlobalPoseMap::part_channel(ji, attr), cv, cu) =
                    1.0;
        }
    }
    return out;
}

EncodedMaps encode_all(std::span<const Pose> poses, const DepthImage& raw,
                       const Skeleton& skeleton, const EncoderConfig& cfg) {
    cfg.validate();
    skeleton.validate();
    const std::size_t k = skeleton.k;
    EncodedMaps out;
    out.parts.grid = GridSpec::for_image(raw.width, raw.height,
                                         kPartMapStride);
    out.parts.H = encode_heatmaps(poses, out.parts.grid, cfg, k);
    auto depth = encode_part_depth(poses, raw, out.parts.grid, cfg, k);
    out.parts.D = std::move(depth.D);
    out.parts.Wd = std::move(depth.Wd);
    auto tpdf = encode_tpdf(poses, out.parts.grid, cfg, k);
    out.parts.X = std::move(tpdf.X);
    out.parts.Y = std::move(tpdf.Y);
    out.parts.Wt = std::move(tpdf.Wt);

    const GridSpec grid16 = GridSpec::for_image(raw.width, raw.height,
                                                kGlobalMapStride);
    auto global = encode_global_pose_map(poses, grid16, cfg, out.parts.D,
                                         out.parts.grid, k);
    out.global = std::move(global.map);
    out.collisions = global.collisions;
    out.dropped = global.dropped;
    return out;
}

}  // namespace popparts
