// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#include "popparts/augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

namespace popparts {

namespace {

void require_same_size(int wa, int ha, int wb, int hb, const char* what) {
    if (wa != wb || ha != hb)
        throw InvariantError(std::string(what) + ": dimension mismatch (" +
                             std::to_string(wa) + "x" + std::to_string(ha) +
                             " vs " + std::to_string(wb) + "x" +
                             std::to_string(hb) + ")");
}

}  // namespace

AugmentedScene hflip(const DepthImage& img, std::span<const Pose> poses,
                     const Skeleton& skeleton) {
    AugmentedScene out;
    out.depth = DepthImage(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.depth.at(x, y) = img.at(img.width - 1 - x, y);

    for (const Pose& pose : poses) {
        Pose flipped = pose;
        for (PartLabel& p : flipped.parts)
            if (p.labeled) p.x = (img.width - 1) - p.x;
        for (const auto& [l, r] : skeleton.flip_pairs)
            std::swap(flipped.parts[l], flipped.parts[r]);
        out.poses.push_back(std::move(flipped));
    }
    return out;
}

MaskImage hflip_mask(const MaskImage& mask) {
    MaskImage out(mask.width, mask.height);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            out.at(x, y) = mask.at(mask.width - 1 - x, y);
    return out;
}

AugmentedScene rotate_crop(const DepthImage& img, std::span<const Pose> poses,
                           double angle_deg, const BBox& crop, int out_w,
                           int out_h) {
    if (!(crop.width() > 0) || !(crop.height() > 0) || out_w <= 0 || out_h <= 0)
        throw InvariantError("rotate_crop: degenerate crop");

    const double theta = angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(theta), s = std::sin(theta);
    const double ox = (img.width - 1) / 2.0, oy = (img.height - 1) / 2.0;
    const double sx = out_w / crop.width(), sy = out_h / crop.height();

    AugmentedScene out;
    out.depth = DepthImage(out_w, out_h);
    for (int y1 = 0; y1 < out_h; ++y1) {
        for (int x1 = 0; x1 < out_w; ++x1) {
            // invert scale+crop, then invert the rotation
            const double xr = crop.x_min + x1 / sx;
            const double yr = crop.y_min + y1 / sy;
            const double x0 = ox + c * (xr - ox) - s * (yr - oy);
            const double y0 = oy + s * (xr - ox) + c * (yr - oy);
            const int px = static_cast<int>(std::lround(x0));
            const int py = static_cast<int>(std::lround(y0));
            if (img.in_bounds(px, py)) out.depth.at(x1, y1) = img.at(px, py);
        }
    }

    for (const Pose& pose : poses) {
        Pose mapped = pose;
        for (PartLabel& p : mapped.parts) {
            if (!p.labeled) continue;
            const double rx = ox + c * (p.x - ox) + s * (p.y - oy);
            const double ry = oy - s * (p.x - ox) + c * (p.y - oy);
            p.x = (rx - crop.x_min) * sx;
            p.y = (ry - crop.y_min) * sy;
            if (p.x < -0.5 || p.x >= out_w - 0.5 || p.y < -0.5 ||
                p.y >= out_h - 0.5) {
                p = PartLabel{};  // rotated/cropped out of frame
            }
        }
        out.poses.push_back(std::move(mapped));
    }
    return out;
}

AugmentedScene composite_background(const SegmentedSample& fg,
                                    const DepthImage& bg) {
    require_same_size(fg.depth.width, fg.depth.height, bg.width, bg.height,
                      "composite_background");
    require_same_size(fg.mask.width, fg.mask.height, bg.width, bg.height,
                      "composite_background");
    AugmentedScene out;
    out.depth = bg;
    for (int y = 0; y < bg.height; ++y)
        for (int x = 0; x < bg.width; ++x)
            if (fg.mask.at(x, y)) out.depth.at(x, y) = fg.depth.at(x, y);
    out.poses.push_back(fg.pose);
    return out;
}

AugmentedScene composite_multiperson(std::span<const SegmentedSample> samples,
                                     const DepthImage& bg, double tol) {
    for (const auto& s : samples) {
        require_same_size(s.depth.width, s.depth.height, bg.width, bg.height,
                          "composite_multiperson");
        require_same_size(s.mask.width, s.mask.height, bg.width, bg.height,
                          "composite_multiperson");
    }
    AugmentedScene out;
    out.depth = DepthImage(bg.width, bg.height);
    for (int y = 0; y < bg.height; ++y) {
        for (int x = 0; x < bg.width; ++x) {
            double best = bg.at(x, y) > 0
                              ? bg.at(x, y)
                              : std::numeric_limits<double>::infinity();
            for (const auto& s : samples) {
                if (!s.mask.at(x, y)) continue;
                const double d = s.depth.at(x, y);
                if (d > 0 && d < best) best = d;  // ties keep the earlier
            }
            out.depth.at(x, y) = std::isinf(best) ? 0.0 : best;
        }
    }

    for (const auto& s : samples) {
        Pose pose = s.pose;
        for (PartLabel& p : pose.parts) {
            if (!p.labeled) continue;
            const int px = static_cast<int>(std::lround(p.x));
            const int py = static_cast<int>(std::lround(p.y));
            if (!out.depth.in_bounds(px, py)) continue;
            const double d = out.depth.at(px, py);
            if (d > 0 && p.z * 1000.0 - d > tol * 1000.0) p.visible = false;
        }
        out.poses.push_back(std::move(pose));
    }
    return out;
}

}  // namespace popparts
