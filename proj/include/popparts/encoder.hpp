// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "popparts/core.hpp"
#include "popparts/tensor.hpp"

namespace popparts {

// Map grid at a fixed downsampling stride. Grid coordinates are pixel
// coordinates divided by the stride; cell (u, v) sits at grid position
// (u, v).
struct GridSpec {
    int stride = 8;
    int gw = 0, gh = 0;

    static GridSpec for_image(int w, int h, int stride) {
        return GridSpec{stride, (w + stride - 1) / stride,
                        (h + stride - 1) / stride};
    }
    bool contains(int u, int v) const {
        return u >= 0 && u < gw && v >= 0 && v < gh;
    }
};

inline constexpr int kPartMapStride = 8;
inline constexpr int kGlobalMapStride = 16;

struct EncoderConfig {
    double sigma = 1.0;              // heatmap Gaussian std, grid units
    double disk_radius = 2.0;        // depth overwrite disk, grid units
    double truncation_radius = 2.0;  // TPDF range r; may be infinity
    std::vector<std::pair<double, double>> anchors{{6, 12}, {3, 6}};  // (w,h), grid-16 units
    double fg_weight = 0.9;
    double bg_weight = 0.1;
    double bbox_margin = kDefaultBBoxMargin;
    double visibility_tol = 0.025;  // meters

    void validate() const;
};

// Stride-8 ground-truth maps. H holds K part channels plus one background
// channel; D is depth in meters; X/Y are displacements in grid units.
// Wherever Wt > 0 the displacement magnitude is bounded by the truncation
// radius.
struct PartMaps {
    GridSpec grid{kPartMapStride, 0, 0};
    Tensor H;        // (K+1, gh, gw)
    Tensor D;        // (K, gh, gw)
    Tensor X, Y;     // (K, gh, gw)
    Tensor Wd, Wt;   // (K, gh, gw)

    std::size_t k() const { return D.empty() ? 0 : D.dims()[0]; }
};

// Stride-16 anchor grid. Per anchor and cell: (tx, ty, tw, th, obj)
// followed by (dx, dy, z, v) for each part. tx/ty are the fractional
// bbox-center offsets within the cell, tw/th log size ratios against the
// anchor, dx/dy part offsets from the cell center in grid-16 units.
struct GlobalPoseMap {
    GridSpec grid{kGlobalMapStride, 0, 0};
    std::size_t k = 0;
    std::vector<std::pair<double, double>> anchors;
    Tensor P;   // (A, 5+4K, gh, gw)
    Tensor Wp;  // same shape

    static constexpr int kTx = 0, kTy = 1, kTw = 2, kTh = 3, kObj = 4;
    static int part_channel(int j, int attr) { return 5 + 4 * j + attr; }
    std::size_t channels() const { return 5 + 4 * k; }
};

// Peak-1 Gaussians around every labeled instance, combined across
// instances by max; background channel is 1 - max over parts.
Tensor encode_heatmaps(std::span<const Pose> poses, const GridSpec& grid,
                       const EncoderConfig& cfg, std::size_t k);

struct DepthEncoding {
    Tensor D, Wd;
};

// Downsampled raw depth with a disk around each instance overwritten by
// its ground-truth z; overlaps resolve to the smaller z. Wd carries
// fg_weight on overwritten cells, bg_weight elsewhere.
DepthEncoding encode_part_depth(std::span<const Pose> poses,
                                const DepthImage& raw, const GridSpec& grid,
                                const EncoderConfig& cfg, std::size_t k);

struct TpdfEncoding {
    Tensor X, Y, Wt;
};

// Truncated displacement field: every cell within the truncation radius of
// the nearest instance stores the offset to it (ties broken by lowest
// instance index); everything else is zero.
TpdfEncoding encode_tpdf(std::span<const Pose> poses, const GridSpec& grid,
                         const EncoderConfig& cfg, std::size_t k);

// v = 1 where the labeled depth differs from the z-buffered depth map by
// more than tol, or the part has no label / falls outside the grid.
std::vector<int> assign_visibility(const Pose& pose, const Tensor& depth_maps,
                                   const GridSpec& grid8, double tol);

struct GlobalEncoding {
    GlobalPoseMap map;
    std::size_t collisions = 0;  // (cell, anchor) claimed twice
    std::size_t dropped = 0;     // bbox center outside the grid
};

// Anchor assignment by best IOU against an anchor-shaped box centered on
// the cell that contains the bbox center. Collisions keep the pose with
// the larger bbox area.
GlobalEncoding encode_global_pose_map(std::span<const Pose> poses,
                                      const GridSpec& grid16,
                                      const EncoderConfig& cfg,
                                      const Tensor& depth_maps,
                                      const GridSpec& grid8, std::size_t k);

struct EncodedMaps {
    PartMaps parts;
    GlobalPoseMap global;
    std::size_t collisions = 0;
    std::size_t dropped = 0;
};

EncodedMaps encode_all(std::span<const Pose> poses, const DepthImage& raw,
                       const Skeleton& skeleton, const EncoderConfig& cfg);

}  // namespace popparts
