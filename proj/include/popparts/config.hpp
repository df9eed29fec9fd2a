// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "popparts/core.hpp"
#include "popparts/decoder.hpp"
#include "popparts/encoder.hpp"
#include "popparts/metrics.hpp"
#include "popparts/synth.hpp"

namespace popparts {

struct SynthConfig {
    int width = 224, height = 224;
    int scenes = 200;
    int min_figures = 1, max_figures = 3;
    double pose_jitter = 0.05;
    double z_lo = 1.5, z_hi = 4.5;
    bool force_overlap = false;
    double boundary_noise = 0.0;  // TPDF regression-confusion coefficient
};

struct AugmentRange {
    double lo = 0.7, hi = 1.7;
};

// One configuration document drives every command; flags override fields.
// Defaults match the reference settings (truncation 2, 5x5 mask, anchors
// 6x12 and 3x6, 2 stages, depth-aug range 0.7-1.7).
struct RunConfig {
    std::uint64_t seed = 1;
    int stages = 2;
    int threads = 1;
    Skeleton skeleton = default_skeleton();
    CameraIntrinsics camera{230.0, 230.0, 111.5, 111.5};
    EncoderConfig encoder;
    FusionConfig fusion;
    MetricConfig metrics;
    OracleNoise noise;
    SynthConfig synth;
    AugmentRange aug;

    void validate() const;

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig from_file(const std::string& path);
    nlohmann::ordered_json to_json() const;
    void save(const std::string& path) const;
};

}  // namespace popparts
