// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#include "popparts/synth.hpp"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

namespace popparts {
namespace {

const CameraIntrinsics kCam{230, 230, 112.0, 112.0};

Skeleton ball_skeleton() {
    Skeleton s;
    s.k = 2;
    s.names = {"a", "b"};
    s.head_pair = {0, 1};
    s.edges = {{0, 1}};
    return s;
}

FigureSpec ball(double x, double y, double z, double r) {
    FigureSpec f;
    f.joints = {Point3D{x, y, z}, Point3D{x, y, z}};
    f.radii = {r};
    return f;
}

TEST(Render, DegenerateCapsuleSphereDepth) {
    const FigureSpec f = ball(0, 0, 2.0, 0.1);
    const RenderResult res = render_scene({&f, 1}, ball_skeleton(), kCam, 224,
                                          224);
    // center pixel ray hits the sphere at 2.0 - 0.1 m
    EXPECT_DOUBLE_EQ(res.depth.at(112, 112), 1900.0);
    EXPECT_EQ(res.masks.size(), 1u);
    EXPECT_EQ(res.masks[0].at(112, 112), 1);
}

TEST(Render, EmptySceneAllInvalid) {
    const RenderResult res = render_scene({}, ball_skeleton(), kCam, 64, 64);
    for (double v : res.depth.data) EXPECT_DOUBLE_EQ(v, 0.0);
    EXPECT_TRUE(res.poses.empty());
}

TEST(Render, FullyHiddenFigureLosesMaskAndVisibility) {
    const std::vector<FigureSpec> figs = {ball(0, 0, 2.0, 0.15),
                                          ball(0, 0, 3.0, 0.10)};
    const RenderResult res = render_scene(figs, ball_skeleton(), kCam, 224,
                                          224);
    int rear_pixels = 0;
    for (auto v : res.masks[1].data) rear_pixels += v;
    EXPECT_EQ(rear_pixels, 0);
    EXPECT_FALSE(res.poses[1].parts[0].visible);
    EXPECT_TRUE(res.poses[0].parts[0].visible);
    // depth everywhere in the overlap equals the nearer surface
    EXPECT_DOUBLE_EQ(res.depth.at(112, 112), 1850.0);
}

TEST(Render, OrderInvariantOverFigures) {
    const Skeleton skel = default_skeleton();
    SceneParams params;
    params.n_figures = 3;
    auto figs = sample_random_scene(7, params, skel, kCam, 224, 224);
    ASSERT_GE(figs.size(), 2u);
    const RenderResult fwd = render_scene(figs, skel, kCam, 224, 224);
    std::reverse(figs.begin(), figs.end());
    const RenderResult rev = render_scene(figs, skel, kCam, 224, 224);
    EXPECT_EQ(fwd.depth.data, rev.depth.data);
    for (std::size_t f = 0; f < figs.size(); ++f)
        EXPECT_EQ(fwd.masks[f].data, rev.masks[figs.size() - 1 - f].data);
}

TEST(Render, ProjectedJointsLandInOwnMaskOrAreFlagged) {
    const Skeleton skel = default_skeleton();
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        SceneParams params;
        params.n_figures = 2;
        const auto figs = sample_random_scene(seed, params, skel, kCam, 224,
                                              224);
        const RenderResult res = render_scene(figs, skel, kCam, 224, 224);
        for (std::size_t f = 0; f < figs.size(); ++f) {
            for (std::size_t j = 0; j < skel.k; ++j) {
                const PartLabel& p = res.poses[f].parts[j];
                if (!p.labeled || !p.visible) continue;
                const int px = static_cast<int>(std::lround(p.x));
                const int py = static_cast<int>(std::lround(p.y));
                bool near_mask = false;
                for (int dy = -3; dy <= 3 && !near_mask; ++dy)
                    for (int dx = -3; dx <= 3 && !near_mask; ++dx)
                        if (res.masks[f].in_bounds(px + dx, py + dy) &&
                            res.masks[f].at(px + dx, py + dy))
                            near_mask = true;
                EXPECT_TRUE(near_mask)
                    << "fig " << f << " part " << j << " seed " << seed;
            }
        }
    }
}

TEST(SampleScene, DeterministicForFixedSeed) {
    const Skeleton skel = default_skeleton();
    SceneParams params;
    params.n_figures = 3;
    const auto a = sample_random_scene(42, params, skel, kCam, 224, 224);
    const auto b = sample_random_scene(42, params, skel, kCam, 224, 224);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t f = 0; f < a.size(); ++f)
        for (std::size_t j = 0; j < 15; ++j) {
            EXPECT_DOUBLE_EQ(a[f].joints[j].x, b[f].joints[j].x);
            EXPECT_DOUBLE_EQ(a[f].joints[j].y, b[f].joints[j].y);
            EXPECT_DOUBLE_EQ(a[f].joints[j].z, b[f].joints[j].z);
        }
    const auto c = sample_random_scene(43, params, skel, kCam, 224, 224);
    bool differs = c.size() != a.size();
    if (!differs) differs = c[0].joints[8].x != a[0].joints[8].x;
    EXPECT_TRUE(differs);
}

TEST(SampleScene, ZeroFiguresGivesEmptyList) {
    SceneParams params;
    params.n_figures = 0;
    EXPECT_TRUE(sample_random_scene(1, params, default_skeleton(), kCam, 224,
                                    224)
                    .empty());
}

TEST(SampleScene, FiguresStayInDepthRange) {
    const Skeleton skel = default_skeleton();
    SceneParams params;
    params.n_figures = 2;
    params.z_lo = 2.0;
    params.z_hi = 3.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto figs = sample_random_scene(seed, params, skel, kCam, 224,
                                              224);
        for (const auto& f : figs) {
            EXPECT_GT(f.joints[8].z, 1.4);  // torso near the sampled root
            EXPECT_LT(f.joints[8].z, 3.6);
        }
    }
}

TEST(SampleScene, ForcedOverlapProducesSilhouetteIntersection) {
    const Skeleton skel = default_skeleton();
    SceneParams params;
    params.n_figures = 2;
    params.force_overlap = true;
    const auto figs = sample_random_scene(5, params, skel, kCam, 224, 224);
    ASSERT_EQ(figs.size(), 2u);
    // render each figure alone; the silhouettes must intersect
    const RenderResult a = render_scene({&figs[0], 1}, skel, kCam, 224, 224);
    const RenderResult b = render_scene({&figs[1], 1}, skel, kCam, 224, 224);
    int shared = 0;
    for (std::size_t i = 0; i < a.masks[0].data.size(); ++i)
        shared += a.masks[0].data[i] && b.masks[0].data[i];
    EXPECT_GT(shared, 0);
}

TEST(Oracle, ZeroNoiseCopiesGroundTruth) {
    const Skeleton skel = default_skeleton();
    SceneParams params;
    params.n_figures = 2;
    const auto figs = sample_random_scene(3, params, skel, kCam, 224, 224);
    const RenderResult res = render_scene(figs, skel, kCam, 224, 224);
    const EncodedMaps gt = encode_all(res.poses, res.depth, skel,
                                      EncoderConfig{});
    const StagePredictions pred = oracle_predict(gt, OracleNoise{}, 2);
    ASSERT_EQ(pred.stages.size(), 2u);
    for (const auto& st : pred.stages) {
        EXPECT_TRUE(st.H == gt.parts.H);
        EXPECT_TRUE(st.D == gt.parts.D);
        EXPECT_TRUE(st.X == gt.parts.X);
        EXPECT_TRUE(st.Y == gt.parts.Y);
    }
    EXPECT_TRUE(pred.P == gt.global.P);
}

TEST(Oracle, SeededNoiseIsReproducibleAndClamped) {
    const Skeleton skel = default_skeleton();
    SceneParams params;
    params.n_figures = 1;
    const auto figs = sample_random_scene(9, params, skel, kCam, 160, 160);
    const RenderResult res = render_scene(figs, skel, kCam, 160, 160);
    const EncodedMaps gt = encode_all(res.poses, res.depth, skel,
                                      EncoderConfig{});
    OracleNoise noise;
    noise.heat_sigma = 0.3;
    noise.pose_sigma = 0.5;
    noise.seed = 1234;
    const StagePredictions a = oracle_predict(gt, noise, 2);
    const StagePredictions b = oracle_predict(gt, noise, 2);
    EXPECT_TRUE(a.stages[0].H == b.stages[0].H);
    EXPECT_TRUE(a.P == b.P);
    EXPECT_FALSE(a.stages[0].H == gt.parts.H);
    for (std::size_t i = 0; i < a.stages[0].H.size(); ++i) {
        EXPECT_GE(a.stages[0].H[i], 0.0);
        EXPECT_LE(a.stages[0].H[i], 1.0);
    }
    const GlobalPoseMap& g = gt.global;
    for (std::size_t anc = 0; anc < g.anchors.size(); ++anc)
        for (int v = 0; v < g.grid.gh; ++v)
            for (int u = 0; u < g.grid.gw; ++u) {
                const double obj = a.P(anc, GlobalPoseMap::kObj, v, u);
                EXPECT_GE(obj, 0.0);
                EXPECT_LE(obj, 1.0);
            }
    // different seeds decorrelate
    noise.seed = 99;
    const StagePredictions c = oracle_predict(gt, noise, 2);
    EXPECT_FALSE(c.stages[0].H == a.stages[0].H);
}

TEST(Oracle, BoundaryNoiseOnlyTouchesDisplacementMaps) {
    const Skeleton skel = default_skeleton();
    SceneParams params;
    params.n_figures = 2;
    const auto figs = sample_random_scene(21, params, skel, kCam, 224, 224);
    const RenderResult res = render_scene(figs, skel, kCam, 224, 224);
    const EncodedMaps gt = encode_all(res.poses, res.depth, skel,
                                      EncoderConfig{});
    StagePredictions pred = oracle_predict(gt, OracleNoise{}, 2);
    add_boundary_confusion_noise(pred, gt, 0.5, 777);
    EXPECT_TRUE(pred.stages[0].H == gt.parts.H);
    EXPECT_TRUE(pred.stages[0].D == gt.parts.D);
    EXPECT_TRUE(pred.P == gt.global.P);
    EXPECT_FALSE(pred.stages[0].X == gt.parts.X);
    // smooth interior cells keep their values: noise sits near boundaries
    std::size_t changed = 0;
    for (std::size_t i = 0; i < pred.stages[0].X.size(); ++i)
        if (pred.stages[0].X[i] != gt.parts.X[i]) ++changed;
    EXPECT_LT(changed, pred.stages[0].X.size() / 2);
}

}  // namespace
}  // namespace popparts
