// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "popparts/core.hpp"
#include "popparts/decoder.hpp"
#include "popparts/encoder.hpp"
#include "popparts/tensor.hpp"

namespace popparts {

// Depth rasters travel as binary 16-bit PGM (P5, maxval 65535, big-endian
// samples), values in millimeters. Masks are 8-bit PGM, nonzero =
// foreground. All loaders throw DataError with file/offset context.
DepthImage read_depth_pgm(const std::string& path);
void write_depth_pgm(const std::string& path, const DepthImage& img);
MaskImage read_mask_pgm(const std::string& path);
void write_mask_pgm(const std::string& path, const MaskImage& mask);

// Tensor container: magic "PTSR", version u16 LE, entry count u16 LE, then
// per entry: name length u8, name bytes, rank u8, dims u32 LE each,
// payload f32 LE row-major.
struct TensorFile {
    std::vector<std::pair<std::string, Tensor>> entries;

    const Tensor* find(const std::string& name) const;
    const Tensor& require(const std::string& name) const;
};

void write_tensor_file(const std::string& path, const TensorFile& file);
TensorFile read_tensor_file(const std::string& path);

// Map bundle <-> container, one named entry per map family plus anchors
// and image size so the file decodes on its own.
TensorFile encoded_maps_to_file(const EncodedMaps& maps, int image_w,
                                int image_h);
EncodedMaps encoded_maps_from_file(const TensorFile& file);

// Pose JSON schema: {"skeleton": {...}, "poses": [{"parts": [...]}]}.
// Decoded files additionally carry "score", "bbox" and per-part "mode".
struct PoseFile {
    Skeleton skeleton;
    std::vector<Pose> poses;
};

PoseFile load_pose_file(const std::string& path);
void save_pose_file(const std::string& path, const Skeleton& skeleton,
                    std::span<const Pose> poses);

struct DetectionFile {
    Skeleton skeleton;
    std::vector<Detection> detections;
};

// Reads a pose file as detections; "score" defaults to 1 and "bbox" to the
// labeled-part box when absent.
DetectionFile load_detections(const std::string& path);
void save_detections(const std::string& path, const Skeleton& skeleton,
                     std::span<const FusedDetection> dets);

}  // namespace popparts
