// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "popparts/core.hpp"
#include "popparts/encoder.hpp"
#include "popparts/geometry.hpp"
#include "popparts/loss.hpp"

namespace popparts {

// Articulated capsule figure: one 3D joint per skeleton part and one
// capsule radius per skeleton edge.
struct FigureSpec {
    std::vector<Point3D> joints;  // meters, camera frame
    std::vector<double> radii;    // meters, per edge
};

// Additive per-family Gaussian noise applied by the oracle predictor.
struct OracleNoise {
    double heat_sigma = 0;
    double depth_sigma = 0;
    double disp_sigma = 0;
    double pose_sigma = 0;
    std::uint64_t seed = 0;
};

struct RenderResult {
    DepthImage depth;              // integer millimeters
    std::vector<Pose> poses;       // projected joints; occlusion flags set
    std::vector<MaskImage> masks;  // per figure, pixels the figure wins
};

// Analytic ray casting against all limb capsules; depth is the nearest
// hit's z, quantized to integer millimeters. A joint is flagged occluded
// when the composited depth in front of it beats its own figure's surface
// by more than tol. Joints projecting outside the image are unlabeled.
RenderResult render_scene(std::span<const FigureSpec> figures,
                          const Skeleton& skeleton,
                          const CameraIntrinsics& cam, int w, int h,
                          double tol = 0.025);

struct SceneParams {
    int n_figures = 1;
    double pose_jitter = 0.05;  // per-joint 3D std, meters
    double z_lo = 1.5, z_hi = 4.5;
    bool force_overlap = false;
};

// Deterministic pseudo-random figures inside the camera frustum. Without
// overlap forcing, figures keep enough separation that their projections
// stay distinct; with it, consecutive figures are placed behind and beside
// the previous one.
std::vector<FigureSpec> sample_random_scene(std::uint64_t seed,
                                            const SceneParams& params,
                                            const Skeleton& skeleton,
                                            const CameraIntrinsics& cam,
                                            int w, int h);

// Perfect-network surrogate: copies the ground-truth maps into `stages`
// identical stages, adds seeded per-family Gaussian noise, clamps H and
// the global obj/v channels to [0,1].
StagePredictions oracle_predict(const EncodedMaps& gt,
                                const OracleNoise& noise, int stages = 2);

// Emulates regression confusion near displacement-field boundaries: each
// X/Y cell receives Gaussian noise with std = coeff * E, where E is the
// largest excess neighbor jump (beyond the smooth-field step) within a
// 5x5 window of the ground-truth field.
void add_boundary_confusion_noise(StagePredictions& pred,
                                  const EncodedMaps& gt, double coeff,
                                  std::uint64_t seed);

// Decoder-ready views of a prediction (weight maps are not predicted and
// stay empty copies of the ground truth's).
PartMaps prediction_part_maps(const StagePredictions& pred,
                              const EncodedMaps& gt);
GlobalPoseMap prediction_global_map(const StagePredictions& pred,
                                    const EncodedMaps& gt);

}  // namespace popparts
