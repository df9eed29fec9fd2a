// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#include "popparts/geometry.hpp"

#include <cmath>

namespace popparts {

Point2D project(const Point3D& p, const CameraIntrinsics& cam) {
    if (!(p.z > 0)) throw InvariantError("behind camera");
    return Point2D{cam.cx + cam.fx * p.x / p.z, cam.cy + cam.fy * p.y / p.z};
}

Point3D backproject(double x, double y, double z,
                    const CameraIntrinsics& cam) {
    if (!(z > 0)) throw InvariantError("behind camera");
    return Point3D{(x - cam.cx) * z / cam.fx, (y - cam.cy) * z / cam.fy, z};
}

RescaledScene depth_rescale(const DepthImage& img,
                            const std::vector<Pose>& poses,
                            const CameraIntrinsics& cam, double a) {
    if (!(a > 0)) throw InvariantError("depth_rescale: a must be positive");
    if (a == 1.0) return RescaledScene{img, poses};

    RescaledScene out;
    out.image = DepthImage(img.width, img.height);
    for (int y1 = 0; y1 < img.height; ++y1) {
        for (int x1 = 0; x1 < img.width; ++x1) {
            const double x0 = cam.cx + a * (x1 - cam.cx);
            const double y0 = cam.cy + a * (y1 - cam.cy);
            const int sx = static_cast<int>(std::lround(x0));
            const int sy = static_cast<int>(std::lround(y0));
            if (!img.in_bounds(sx, sy)) continue;
            const double d = img.at(sx, sy);
            if (d > 0) out.image.at(x1, y1) = a * d;
        }
    }

    out.poses = poses;
    for (Pose& pose : out.poses) {
        for (PartLabel& p : pose.parts) {
            if (!p.labeled) continue;
            p.x = cam.cx + (p.x - cam.cx) / a;
            p.y = cam.cy + (p.y - cam.cy) / a;
            p.z = a * p.z;
        }
    }
    return out;
}

}  // namespace popparts
