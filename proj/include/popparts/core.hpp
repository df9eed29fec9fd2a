// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace popparts {

// Malformed or inconsistent input files.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Violated preconditions or domain invariants.
struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Part layout shared by every per-part map. Pair indices are part indices;
// flip_pairs lists (left, right).
struct Skeleton {
    std::size_t k = 0;
    std::vector<std::string> names;
    std::vector<std::pair<int, int>> flip_pairs;
    std::pair<int, int> head_pair{0, 1};  // (head, neck)
    std::vector<std::pair<int, int>> edges;

    void validate() const;
};

// 15-part layout in ITOP order: head, neck, r/l shoulder, r/l elbow,
// r/l hand, torso, r/l waist, r/l knee, r/l foot.
Skeleton default_skeleton();

struct CameraIntrinsics {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    void validate() const;
};

// Depth raster in millimeters, 0 = invalid.
struct DepthImage {
    int width = 0, height = 0;
    std::vector<double> data;  // row-major

    DepthImage() = default;
    DepthImage(int w, int h)
        : width(w), height(h),
          data(static_cast<std::size_t>(w) * h, 0.0) {}

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    double at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    double& at(int x, int y) {
        return data[static_cast<std::size_t>(y) * width + x];
    }
};

// Binary foreground mask, nonzero = human pixel.
struct MaskImage {
    int width = 0, height = 0;
    std::vector<std::uint8_t> data;

    MaskImage() = default;
    MaskImage(int w, int h)
        : width(w), height(h),
          data(static_cast<std::size_t>(w) * h, 0) {}

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    std::uint8_t at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(int x, int y) {
        return data[static_cast<std::size_t>(y) * width + x];
    }
};

// One keypoint label. `labeled` is ground-truth availability (truncated
// parts carry no label at all); `visible` is false when the part is
// occluded by a nearer surface. Unlabeled parts keep x/y/z = 0.
struct PartLabel {
    double x = 0, y = 0;  // pixels, sub-pixel precision
    double z = 0;         // meters
    bool visible = true;
    bool labeled = false;
};

struct Pose {
    std::vector<PartLabel> parts;

    Pose() = default;
    explicit Pose(std::size_t k) : parts(k) {}
    std::size_t size() const { return parts.size(); }
    bool has_labeled_part() const {
        for (const auto& p : parts)
            if (p.labeled) return true;
        return false;
    }
};

struct BBox {
    double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    double center_x() const { return 0.5 * (x_min + x_max); }
    double center_y() const { return 0.5 * (y_min + y_max); }
};

struct Detection {
    BBox bbox;
    double score = 0;  // [0, 1]
    Pose pose;
};

// Box expansion used whenever a bbox is derived from labeled keypoints.
inline constexpr double kDefaultBBoxMargin = 0.1;

// Tight box over labeled 2D parts, grown by margin * max(w, h) on each
// side. Throws InvariantError("empty pose") when nothing is labeled.
BBox bbox_from_pose(const Pose& pose, double margin = kDefaultBBoxMargin);

// Intersection over union; 0 when the union has no area.
double iou(const BBox& a, const BBox& b);

}  // namespace popparts
