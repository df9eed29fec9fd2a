// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#include "popparts/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

#include "popparts/decoder.hpp"
#include "popparts/loss.hpp"
#include "popparts/rng.hpp"
#include "popparts/synth.hpp"

namespace popparts {

namespace {

// Static index chunking; every worker writes only its own slots, so the
// result is independent of scheduling.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (int i = t; i < n; i += threads) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

struct ScenePair {
    SceneSample fused;
    SceneSample global;
    std::size_t collisions = 0;
};

std::vector<Detection> to_detections(const std::vector<FusedDetection>& fds) {
    std::vector<Detection> out;
    out.reserve(fds.size());
    for (const auto& fd : fds) out.push_back(fd.det);
    return out;
}

}  // namespace

std::uint64_t scene_seed(std::uint64_t run_seed, int scene_index) {
    return hash_mix(run_seed ^ (0x53434e45ull +
                                static_cast<std::uint64_t>(scene_index) *
                                    0x9e3779b97f4a7c15ull));
}

int resolve_threads(int configured) {
    int n = std::max(1, configured);
    if (const char* env = std::getenv("POPPARTS_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) n = std::min(n, cap);
    }
    return n;
}

RoundtripReport run_roundtrip(const RunConfig& cfg) {
    cfg.validate();
    const int n = cfg.synth.scenes;
    std::vector<ScenePair> scenes(n);

    parallel_for(n, resolve_threads(cfg.threads), [&](int i) {
        const std::uint64_t sseed = scene_seed(cfg.seed, i);
        const CounterRng rng(sseed);
        RngStream pick(rng, 42);  // scene-level draws
        SceneParams params;
        params.n_figures = pick.uniform_int(cfg.synth.min_figures,
                                            cfg.synth.max_figures);
        params.pose_jitter = cfg.synth.pose_jitter;
        params.z_lo = cfg.synth.z_lo;
        params.z_hi = cfg.synth.z_hi;
        params.force_overlap = cfg.synth.force_overlap;

        const auto figures = sample_random_scene(sseed, params, cfg.skeleton,
                                                 cfg.camera, cfg.synth.width,
                                                 cfg.synth.height);
        const RenderResult render =
            render_scene(figures, cfg.skeleton, cfg.camera, cfg.synth.width,
                         cfg.synth.height, cfg.encoder.visibility_tol);
        const EncodedMaps gt = encode_all(render.poses, render.depth,
                                          cfg.skeleton, cfg.encoder);

        OracleNoise noise = cfg.noise;
        noise.seed = hash_mix(noise.seed ^ sseed);
        StagePredictions pred = oracle_predict(gt, noise, cfg.stages);
        if (cfg.synth.boundary_noise > 0)
            add_boundary_confusion_noise(pred, gt, cfg.synth.boundary_noise,
                                         noise.seed);

        const PartMaps maps = prediction_part_maps(pred, gt);
        const GlobalPoseMap global = prediction_global_map(pred, gt);

        ScenePair& out = scenes[i];
        out.collisions = gt.collisions;
        out.fused.gts = render.poses;
        out.global.gts = render.poses;
        out.fused.preds = to_detections(
            decode_full(global, maps, cfg.camera, cfg.skeleton, cfg.fusion,
                        DecodeMode::kFused));
        out.global.preds = to_detections(
            decode_full(global, maps, cfg.camera, cfg.skeleton, cfg.fusion,
                        DecodeMode::kGlobalOnly));
    });

    std::vector<SceneSample> fused, global;
    RoundtripReport rep;
    rep.scenes = n;
    for (ScenePair& sp : scenes) {
        rep.collisions += sp.collisions;
        fused.push_back(std::move(sp.fused));
        global.push_back(std::move(sp.global));
    }
    rep.fused_2d = evaluate(fused, cfg.skeleton, cfg.camera, cfg.metrics,
                            Space::k2D);
    rep.fused_3d = evaluate(fused, cfg.skeleton, cfg.camera, cfg.metrics,
                            Space::k3D);
    rep.global_2d = evaluate(global, cfg.skeleton, cfg.camera, cfg.metrics,
                             Space::k2D);
    rep.global_3d = evaluate(global, cfg.skeleton, cfg.camera, cfg.metrics,
                             Space::k3D);
    return rep;
}

double run_gradient_check(std::uint64_t seed, int instances) {
    const CounterRng rng(seed);
    double worst = 0;
    for (int inst = 0; inst < instances; ++inst) {
        RngStream rs(rng, hash_mix(1 + inst));
        const std::size_t k = static_cast<std::size_t>(rs.uniform_int(1, 4));
        const int gw = rs.uniform_int(3, 8);
        const int gh = rs.uniform_int(3, 8);
        const int gw16 = (gw + 1) / 2, gh16 = (gh + 1) / 2;
        const int stages = rs.uniform_int(1, 2);
        const std::size_t a_count = 2;

        EncodedMaps gt;
        gt.parts.grid = GridSpec{8, gw, gh};
        auto rand_tensor = [&](std::vector<std::size_t> dims, double lo,
                               double hi) {
            Tensor t(std::move(dims));
            for (std::size_t i = 0; i < t.size(); ++i)
                t[i] = rs.uniform(lo, hi);
            return t;
        };
        const std::size_t ghs = gh, gws = gw;
        gt.parts.H = rand_tensor({k + 1, ghs, gws}, 0, 1);
        gt.parts.D = rand_tensor({k, ghs, gws}, 0, 4);
        gt.parts.X = rand_tensor({k, ghs, gws}, -2, 2);
        gt.parts.Y = rand_tensor({k, ghs, gws}, -2, 2);
        gt.parts.Wd = Tensor({k, ghs, gws});
        gt.parts.Wt = Tensor({k, ghs, gws});
        for (std::size_t i = 0; i < gt.parts.Wd.size(); ++i) {
            gt.parts.Wd[i] = rs.uniform() < 0.5 ? 0.1 : 0.9;
            gt.parts.Wt[i] = rs.uniform() < 0.5 ? 0.0 : 1.0;
        }
        gt.global.grid = GridSpec{16, gw16, gh16};
        gt.global.k = k;
        gt.global.anchors = {{6, 12}, {3, 6}};
        const std::size_t ch = gt.global.channels();
        gt.global.P = rand_tensor({a_count, ch, static_cast<std::size_t>(gh16),
                                   static_cast<std::size_t>(gw16)},
                                  -2, 2);
        gt.global.Wp = Tensor(gt.global.P.dims());
        for (std::size_t i = 0; i < gt.global.Wp.size(); ++i)
            gt.global.Wp[i] = rs.uniform() < 0.5 ? 0.1 : 1.0;

        StagePredictions pred;
        pred.stages.resize(stages);
        for (int s = 0; s < stages; ++s) {
            pred.stages[s].H = rand_tensor({k + 1, ghs, gws}, 0, 1);
            pred.stages[s].D = rand_tensor({k, ghs, gws}, 0, 4);
            pred.stages[s].X = rand_tensor({k, ghs, gws}, -2, 2);
            pred.stages[s].Y = rand_tensor({k, ghs, gws}, -2, 2);
        }
        pred.P = rand_tensor(gt.global.P.dims(), -2, 2);

        worst = std::max(worst, max_gradient_check_error(pred, gt));
    }
    return worst;
}

}  // namespace popparts
