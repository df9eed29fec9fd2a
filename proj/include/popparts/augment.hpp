// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "popparts/core.hpp"

namespace popparts {

// One segmented person: depth crop, foreground mask, pose.
struct SegmentedSample {
    DepthImage depth;
    MaskImage mask;
    Pose pose;
};

struct AugmentedScene {
    DepthImage depth;
    std::vector<Pose> poses;
};

// Mirror about the vertical axis; labels map x -> (w-1) - x and left/right
// part entries swap per the skeleton's flip pairs. The flip is exactly
// involutive for labels with up to 20 fractional bits (any realistically
// quantized source).
AugmentedScene hflip(const DepthImage& img, std::span<const Pose> poses,
                     const Skeleton& skeleton);
MaskImage hflip_mask(const MaskImage& mask);

// Rotate about the image center (degrees; positive maps (x,y)->(y,w-1-x)
// at 90 on a square image), crop, resize to out_w x out_h.
// Nearest-neighbor sampling, invalid fill. Depth values are unchanged.
// Labels outside the output frame come back unlabeled.
AugmentedScene rotate_crop(const DepthImage& img, std::span<const Pose> poses,
                           double angle_deg, const BBox& crop, int out_w,
                           int out_h);

// bg except where the mask is set, which takes the foreground depth.
AugmentedScene composite_background(const SegmentedSample& fg,
                                    const DepthImage& bg);

// Per-pixel z-buffer over {bg} and all masked sample depths, 0 treated as
// +inf. Parts whose own depth exceeds the composited depth at their pixel
// by more than tol are flagged occluded.
AugmentedScene composite_multiperson(std::span<const SegmentedSample> samples,
                                     const DepthImage& bg, double tol = 0.025);

}  // namespace popparts
