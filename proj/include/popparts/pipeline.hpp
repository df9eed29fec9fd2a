// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "popparts/config.hpp"
#include "popparts/metrics.hpp"

namespace popparts {

// Full-loop report: scene generation -> encode -> oracle -> decode ->
// metrics, with fused and global-only decodes evaluated side by side.
struct RoundtripReport {
    EvalReport fused_2d, fused_3d;
    EvalReport global_2d, global_3d;
    int scenes = 0;
    std::size_t collisions = 0;
};

RoundtripReport run_roundtrip(const RunConfig& cfg);

// Gradient check over `instances` randomized small map sets; returns the
// worst normalized analytic-vs-central-difference error.
double run_gradient_check(std::uint64_t seed, int instances);

// Worker cap: config value clamped by env POPPARTS_THREADS when set.
int resolve_threads(int configured);

std::uint64_t scene_seed(std::uint64_t run_seed, int scene_index);

}  // namespace popparts
