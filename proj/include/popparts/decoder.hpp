// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "popparts/core.hpp"
#include "popparts/encoder.hpp"
#include "popparts/geometry.hpp"

namespace popparts {

struct FusionConfig {
    int mask_half = 2;          // aggregation mask is (2*mask_half+1)^2
    double conf_thresh = 0.2;   // below this, trust the global part (mode A)
    double vis_thresh = 0.5;    // at or above this, same-part occlusion (mode C)
    double nms_iou = 0.45;
    double obj_thresh = 0.5;

    void validate() const;
};

// Conflict resolution outcome per part: A trusts the global prediction
// (no local evidence), B fuses with the part maps, C trusts the global
// prediction because the local evidence belongs to another person.
enum class PartMode : char { kA = 'A', kB = 'B', kC = 'C' };

// One part as decoded from the global pose map.
struct GlobalPart {
    double x = 0, y = 0;  // pixels
    double z = 0;         // meters
    double v = 0;         // predicted visibility-conflict score, [0,1]
    bool labeled = false;
};

struct FusedPart {
    double x = 0, y = 0;  // pixels
    double z = 0;         // meters
    PartMode mode = PartMode::kB;
};

struct GlobalPoseCandidate {
    BBox bbox;
    double score = 0;
    std::vector<GlobalPart> parts;
};

// Inverts the anchor encoding at every cell with obj >= obj_thresh, then
// greedy NMS by descending score (suppression when IOU > nms_iou).
std::vector<GlobalPoseCandidate> decode_global_candidates(
    const GlobalPoseMap& map, const FusionConfig& cfg);

std::vector<Detection> decode_global_poses(const GlobalPoseMap& map,
                                           const FusionConfig& cfg);

// Displaces the global part along the TPDF, then aggregates position and
// depth over the mask with the part heatmap as weights. Inputs in stride-8
// grid units; output in pixels/meters. Falls back to mode A when the mask
// has no heatmap support; depth averaging skips invalid (<= 0) map cells
// and falls back to the global depth.
FusedPart fuse_part(double grid_x, double grid_y, double global_z, int part,
                    const PartMaps& maps, const FusionConfig& cfg);

// Mode selection for one part. Position in stride-8 grid units.
PartMode resolve_mode(double grid_x, double grid_y, double v_hat, int part,
                      const PartMaps& maps, const FusionConfig& cfg);

enum class DecodeMode { kFused, kGlobalOnly };

struct FusedDetection {
    Detection det;
    std::vector<PartMode> modes;     // per part
    std::vector<Point3D> joints3d;   // backprojected; zero where unlabeled
};

// Full pipeline: NMS over the global map, per-part mode resolution and
// fusion, back-projection to 3D. Parts with z <= 0 come back unlabeled.
std::vector<FusedDetection> decode_full(const GlobalPoseMap& map,
                                        const PartMaps& parts,
                                        const CameraIntrinsics& cam,
                                        const Skeleton& skeleton,
                                        const FusionConfig& cfg,
                                        DecodeMode mode = DecodeMode::kFused);

}  // namespace popparts
