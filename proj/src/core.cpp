// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#include "popparts/core.hpp"

#include <algorithm>
#include <cmath>

namespace popparts {

void Skeleton::validate() const {
    if (k == 0) throw InvariantError("skeleton: part count must be positive");
    if (names.size() != k)
        throw InvariantError("skeleton: expected " + std::to_string(k) +
                             " names, got " + std::to_string(names.size()));
    auto check_index = [this](int idx, const char* what) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= k)
            throw InvariantError(std::string("skeleton: ") + what +
                                 " index out of range: " + std::to_string(idx));
    };
    for (const auto& [l, r] : flip_pairs) {
        check_index(l, "flip pair");
        check_index(r, "flip pair");
        if (l == r) throw InvariantError("skeleton: flip pair indices equal");
    }
    check_index(head_pair.first, "head pair");
    check_index(head_pair.second, "head pair");
    for (const auto& [a, b] : edges) {
        check_index(a, "edge");
        check_index(b, "edge");
    }
}

Skeleton default_skeleton() {
    Skeleton s;
    s.k = 15;
    s.names = {"head",    "neck",    "r_shoulder", "l_shoulder", "r_elbow",
               "l_elbow", "r_hand",  "l_hand",     "torso",      "r_waist",
               "l_waist", "r_knee",  "l_knee",     "r_foot",     "l_foot"};
    s.flip_pairs = {{3, 2}, {5, 4}, {7, 6}, {10, 9}, {12, 11}, {14, 13}};
    s.head_pair = {0, 1};
    s.edges = {{0, 1}, {1, 2},  {1, 3},  {2, 4},  {3, 5},  {4, 6},  {5, 7},
               {1, 8}, {8, 9},  {8, 10}, {9, 11}, {10, 12}, {11, 13}, {12, 14}};
    return s;
}

void CameraIntrinsics::validate() const {
    if (!(fx > 0) || !(fy > 0))
        throw InvariantError("camera: focal lengths must be positive");
}

BBox bbox_from_pose(const Pose& pose, double margin) {
    double x_min = 0, y_min = 0, x_max = 0, y_max = 0;
    bool any = false;
    for (const auto& p : pose.parts) {
        if (!p.labeled) continue;
        if (!any) {
            x_min = x_max = p.x;
            y_min = y_max = p.y;
            any = true;
        } else {
            x_min = std::min(x_min, p.x);
            x_max = std::max(x_max, p.x);
            y_min = std::min(y_min, p.y);
            y_max = std::max(y_max, p.y);
        }
    }
    if (!any) throw InvariantError("empty pose");
    const double pad = margin * std::max(x_max - x_min, y_max - y_min);
    return BBox{x_min - pad, y_min - pad, x_max + pad, y_max + pad};
}

double iou(const BBox& a, const BBox& b) {
    const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    const double inter = std::max(0.0, iw) * std::max(0.0, ih);
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

}  // namespace popparts
