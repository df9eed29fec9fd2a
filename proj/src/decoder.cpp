// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#include "popparts/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace popparts {

namespace {

constexpr double kEps = 1e-8;

int clamp_cell(double g, int n) {
    const int c = static_cast<int>(std::lround(g));
    return std::clamp(c, 0, n - 1);
}

}  // namespace

void FusionConfig::validate() const {
    if (mask_half < 0) throw InvariantError("fusion: mask_half must be >= 0");
    auto in01 = [](double t) { return t >= 0.0 && t <= 1.0; };
    if (!in01(conf_thresh) || !in01(vis_thresh) || !in01(nms_iou) ||
        !in01(obj_thresh))
        throw InvariantError("fusion: thresholds must lie in [0,1]");
}

std::vector<GlobalPoseCandidate> decode_global_candidates(
    const GlobalPoseMap& map, const FusionConfig& cfg) {
    cfg.validate();
    std::vector<GlobalPoseCandidate> cands;
    const int stride = map.grid.stride;
    for (std::size_t a = 0; a < map.anchors.size(); ++a) {
        const auto& [aw, ah] = map.anchors[a];
        for (int v = 0; v < map.grid.gh; ++v) {
            for (int u = 0; u < map.grid.gw; ++u) {
                const double obj = map.P(a, GlobalPoseMap::kObj, v, u);
                if (obj < cfg.obj_thresh) continue;
                GlobalPoseCandidate c;
                c.score = obj;
                const double cx = (u + map.P(a, GlobalPoseMap::kTx, v, u)) *
                                  stride;
                const double cy = (v + map.P(a, GlobalPoseMap::kTy, v, u)) *
                                  stride;
                const double bw =
                    aw * std::exp(map.P(a, GlobalPoseMap::kTw, v, u)) * stride;
                const double bh =
                    ah * std::exp(map.P(a, GlobalPoseMap::kTh, v, u)) * stride;
                c.bbox = BBox{cx - bw / 2, cy - bh / 2, cx + bw / 2,
                              cy + bh / 2};
                c.parts.resize(map.k);
                for (std::size_t j = 0; j < map.k; ++j) {
                    const int ji = static_cast<int>(j);
                    GlobalPart& p = c.parts[j];
                    p.x = (u + 0.5 +
                           map.P(a, GlobalPoseMap::part_channel(ji, 0), v, u)) *
                          stride;
                    p.y = (v + 0.5 +
                           map.P(a, GlobalPoseMap::part_channel(ji, 1), v, u)) *
                          stride;
                    p.z = map.P(a, GlobalPoseMap::part_channel(ji, 2), v, u);
                    p.v = map.P(a, GlobalPoseMap::part_channel(ji, 3), v, u);
                    p.labeled = p.z > 0;
                }
                cands.push_back(std::move(c));
            }
        }
    }

    // Greedy NMS, score-descending, stable for equal scores.
    std::vector<std::size_t> order(cands.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         return cands[a].score > cands[b].score;
                     });
    std::vector<GlobalPoseCandidate> kept;
    for (std::size_t idx : order) {
        bool suppressed = false;
        for (const auto& k : kept) {
            if (iou(cands[idx].bbox, k.bbox) > cfg.nms_iou) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(std::move(cands[idx]));
    }
    return kept;
}

std::vector<Detection> decode_global_poses(const GlobalPoseMap& map,
                                           const FusionConfig& cfg) {
    std::vector<Detection> out;
    for (const auto& c : decode_global_candidates(map, cfg)) {
        Detection d;
        d.bbox = c.bbox;
        d.score = c.score;
        d.pose.parts.resize(c.parts.size());
        for (std::size_t j = 0; j < c.parts.size(); ++j) {
            const GlobalPart& g = c.parts[j];
            d.pose.parts[j] =
                PartLabel{g.x, g.y, g.z, g.v < cfg.vis_thresh, g.labeled};
        }
        out.push_back(std::move(d));
    }
    return out;
}

FusedPart fuse_part(double grid_x, double grid_y, double global_z, int part,
                    const PartMaps& maps, const FusionConfig& cfg) {
    const GridSpec& grid = maps.grid;
    const int lu = clamp_cell(grid_x, grid.gw);
    const int lv = clamp_cell(grid_y, grid.gh);
    const double xbar = grid_x + maps.X(part, lv, lu);
    const double ybar = grid_y + maps.Y(part, lv, lu);
    const int cu = static_cast<int>(std::floor(xbar));
    const int cv = static_cast<int>(std::floor(ybar));

    // Every cell in the mask votes for its own displacement target
    // u + X(u,v); votes are averaged with the heatmap as weights. Depth is
    // averaged the same way over cells holding a valid (> 0) depth.
    double sh = 0, sx = 0, sy = 0, shd = 0, sd = 0;
    for (int v = cv - cfg.mask_half; v <= cv + cfg.mask_half; ++v) {
        for (int u = cu - cfg.mask_half; u <= cu + cfg.mask_half; ++u) {
            if (!grid.contains(u, v)) continue;
            const double h = maps.H(part, v, u);
            sh += h;
            sx += h * (u + maps.X(part, v, u));
            sy += h * (v + maps.Y(part, v, u));
            const double d = maps.D(part, v, u);
            if (d > 0) {
                shd += h;
                sd += h * d;
            }
        }
    }
    if (sh < kEps) {
        return FusedPart{grid_x * grid.stride, grid_y * grid.stride, global_z,
                         PartMode::kA};
    }
    FusedPart f;
    f.x = (sx / sh) * grid.stride;
    f.y = (sy / sh) * grid.stride;
    f.z = shd > kEps ? sd / shd : global_z;
    f.mode = PartMode::kB;
    return f;
}

PartMode resolve_mode(double grid_x, double grid_y, double v_hat, int part,
                      const PartMaps& maps, const FusionConfig& cfg) {
    if (v_hat >= cfg.vis_thresh) return PartMode::kC;
    const GridSpec& grid = maps.grid;
    const int cu = clamp_cell(grid_x, grid.gw);
    const int cv = clamp_cell(grid_y, grid.gh);
    double peak = 0.0;
    for (int v = cv - cfg.mask_half; v <= cv + cfg.mask_half; ++v)
        for (int u = cu - cfg.mask_half; u <= cu + cfg.mask_half; ++u)
            if (grid.contains(u, v))
                peak = std::max(peak, maps.H(part, v, u));
    return peak < cfg.conf_thresh ? PartMode::kA : PartMode::kB;
}

std::vector<FusedDetection> decode_full(const GlobalPoseMap& map,
                                        const PartMaps& parts,
                                        const CameraIntrinsics& cam,
                                        const Skeleton& skeleton,
                                        const FusionConfig& cfg,
                                        DecodeMode mode) {
    cam.validate();
    skeleton.validate();
    const int stride = parts.grid.stride;
    std::vector<FusedDetection> out;
    for (const auto& c : decode_global_candidates(map, cfg)) {
        FusedDetection fd;
        fd.det.bbox = c.bbox;
        fd.det.score = c.score;
        fd.det.pose.parts.resize(skeleton.k);
        fd.modes.assign(skeleton.k, PartMode::kA);
        fd.joints3d.resize(skeleton.k);
        for (std::size_t j = 0; j < skeleton.k && j < c.parts.size(); ++j) {
            const GlobalPart& g = c.parts[j];
            PartLabel& p = fd.det.pose.parts[j];
            if (!g.labeled) {
                p.labeled = false;
                continue;
            }
            const double gx = g.x / stride;
            const double gy = g.y / stride;
            PartMode m = PartMode::kA;
            if (mode == DecodeMode::kFused) {
                m = resolve_mode(gx, gy, g.v, static_cast<int>(j), parts, cfg);
                if (m == PartMode::kB) {
                    const FusedPart f = fuse_part(gx, gy, g.z,
                                                  static_cast<int>(j), parts,
                                                  cfg);
                    m = f.mode;  // fallback may demote to A
                    if (f.mode == PartMode::kB) {
                        p.x = f.x;
                        p.y = f.y;
                        p.z = f.z;
                    }
                }
            }
            if (m != PartMode::kB) {
                p.x = g.x;
                p.y = g.y;
                p.z = g.z;
            }
            p.labeled = p.z > 0;
            p.visible = m != PartMode::kC;
            fd.modes[j] = m;
            if (p.labeled) fd.joints3d[j] = backproject(p.x, p.y, p.z, cam);
        }
        out.push_back(std::move(fd));
    }
    return out;
}

}  // namespace popparts
