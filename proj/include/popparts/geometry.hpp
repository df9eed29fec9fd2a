// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "popparts/core.hpp"

namespace popparts {

// Camera-frame point, meters. x right, y down, z along the optical axis.
struct Point3D {
    double x = 0, y = 0, z = 0;
};

struct Point2D {
    double x = 0, y = 0;
};

// Pinhole projection. Throws InvariantError("behind camera") for z <= 0.
Point2D project(const Point3D& p, const CameraIntrinsics& cam);

// Inverse of project for a known depth z (meters).
Point3D backproject(double x, double y, double z, const CameraIntrinsics& cam);

struct RescaledScene {
    DepthImage image;
    std::vector<Pose> poses;
};

// Simulates moving the camera along the principal axis: new depth Z1 =
// a * Z0 with the image inverse-warped accordingly (nearest-neighbor,
// invalid and out-of-bounds sources become 0). Labels map as
// x1 = cx + (x0-cx)/a, z1 = a*z0; the 3D X,Y of every label is preserved.
RescaledScene depth_rescale(const DepthImage& img,
                            const std::vector<Pose>& poses,
                            const CameraIntrinsics& cam, double a);

}  // namespace popparts
