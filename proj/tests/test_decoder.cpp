// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#include "popparts/decoder.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace popparts {
namespace {

PartMaps make_maps(int gw, int gh, std::size_t k) {
    PartMaps m;
    m.grid = GridSpec{8, gw, gh};
    const std::size_t gws = gw, ghs = gh;
    m.H = Tensor({k + 1, ghs, gws});
    m.D = Tensor({k, ghs, gws});
    m.X = Tensor({k, ghs, gws});
    m.Y = Tensor({k, ghs, gws});
    m.Wd = Tensor({k, ghs, gws});
    m.Wt = Tensor({k, ghs, gws});
    return m;
}

TEST(FusePart, ZeroFieldUniformHeat) {
    PartMaps m = make_maps(20, 20, 1);
    for (int v = 0; v < 20; ++v)
        for (int u = 0; u < 20; ++u) {
            m.H(0, v, u) = 0.5;
            m.D(0, v, u) = 2.0;
        }
    const FusedPart f = fuse_part(10.3, 11.6, 9.9, 0, m, FusionConfig{});
    EXPECT_EQ(f.mode, PartMode::kB);
    EXPECT_DOUBLE_EQ(f.x, 10 * 8.0);
    EXPECT_DOUBLE_EQ(f.y, 11 * 8.0);
    EXPECT_DOUBLE_EQ(f.z, 2.0);
}

TEST(FusePart, OneHotHeatRecoversCellTarget) {
    PartMaps m = make_maps(20, 20, 1);
    // support at cell c = (9, 12), inside the mask around floor(xbar)
    m.H(0, 12, 9) = 1.0;
    m.X(0, 12, 9) = 0.7;
    m.Y(0, 12, 9) = -0.4;
    m.D(0, 12, 9) = 3.25;
    const FusedPart f = fuse_part(10.2, 11.4, 9.9, 0, m, FusionConfig{});
    EXPECT_EQ(f.mode, PartMode::kB);
    EXPECT_DOUBLE_EQ(f.x, (9 + 0.7) * 8.0);
    EXPECT_DOUBLE_EQ(f.y, (12 - 0.4) * 8.0);
    EXPECT_DOUBLE_EQ(f.z, 3.25);
}

TEST(FusePart, MatchesIndependentWeightedSum) {
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> uh(0, 1), ud(0.5, 4.0),
        ux(-2, 2), up(3, 16);
    FusionConfig cfg;
    for (int trial = 0; trial < 100; ++trial) {
        PartMaps m = make_maps(20, 20, 1);
        for (int v = 0; v < 20; ++v)
            for (int u = 0; u < 20; ++u) {
                m.H(0, v, u) = uh(gen);
                m.D(0, v, u) = gen() % 5 == 0 ? 0.0 : ud(gen);
                m.X(0, v, u) = ux(gen);
                m.Y(0, v, u) = ux(gen);
            }
        const double gx = up(gen), gy = up(gen), gz = ud(gen);
        const FusedPart f = fuse_part(gx, gy, gz, 0, m, cfg);

        // independent evaluation of the aggregation
        const int lu = std::clamp<int>(std::lround(gx), 0, 19);
        const int lv = std::clamp<int>(std::lround(gy), 0, 19);
        const double xbar = gx + m.X(0, lv, lu);
        const double ybar = gy + m.Y(0, lv, lu);
        const int cu = static_cast<int>(std::floor(xbar));
        const int cv = static_cast<int>(std::floor(ybar));
        double sh = 0, sx = 0, sy = 0, swd = 0, sd = 0;
        for (int v = cv - 2; v <= cv + 2; ++v)
            for (int u = cu - 2; u <= cu + 2; ++u) {
                if (u < 0 || v < 0 || u >= 20 || v >= 20) continue;
                const double hw = m.H(0, v, u);
                sh += hw;
                sx += hw * (u + m.X(0, v, u));
                sy += hw * (v + m.Y(0, v, u));
                if (m.D(0, v, u) > 0) {
                    swd += hw;
                    sd += hw * m.D(0, v, u);
                }
            }
        ASSERT_GT(sh, 1e-8);
        EXPECT_DOUBLE_EQ(f.x, sx / sh * 8.0);
        EXPECT_DOUBLE_EQ(f.y, sy / sh * 8.0);
        if (swd > 1e-8)
            EXPECT_DOUBLE_EQ(f.z, sd / swd);
        else
            EXPECT_DOUBLE_EQ(f.z, gz);
    }
}

TEST(FusePart, NoHeatSupportFallsBackToModeA) {
    PartMaps m = make_maps(20, 20, 1);
    const FusedPart f = fuse_part(10.0, 10.0, 2.5, 0, m, FusionConfig{});
    EXPECT_EQ(f.mode, PartMode::kA);
    EXPECT_DOUBLE_EQ(f.x, 80.0);
    EXPECT_DOUBLE_EQ(f.z, 2.5);
}

TEST(FusePart, AllInvalidDepthFallsBackToGlobalDepth) {
    PartMaps m = make_maps(20, 20, 1);
    for (int v = 0; v < 20; ++v)
        for (int u = 0; u < 20; ++u) m.H(0, v, u) = 0.5;
    const FusedPart f = fuse_part(10.0, 10.0, 2.5, 0, m, FusionConfig{});
    EXPECT_EQ(f.mode, PartMode::kB);
    EXPECT_DOUBLE_EQ(f.z, 2.5);
}

TEST(ResolveMode, LowConfidenceIsA) {
    PartMaps m = make_maps(20, 20, 1);
    EXPECT_EQ(resolve_mode(10.0, 10.0, 0.0, 0, m, FusionConfig{}),
              PartMode::kA);
}

TEST(ResolveMode, HighConfidenceVisibleIsB) {
    PartMaps m = make_maps(20, 20, 1);
    m.H(0, 10, 10) = 0.9;
    EXPECT_EQ(resolve_mode(10.0, 10.0, 0.0, 0, m, FusionConfig{}),
              PartMode::kB);
}

TEST(ResolveMode, VisibilityFlagOverridesToC) {
    PartMaps m = make_maps(20, 20, 1);
    m.H(0, 10, 10) = 0.9;
    EXPECT_EQ(resolve_mode(10.0, 10.0, 0.9, 0, m, FusionConfig{}),
              PartMode::kC);
    EXPECT_EQ(resolve_mode(10.0, 10.0, 0.9, 0, make_maps(20, 20, 1),
                           FusionConfig{}),
              PartMode::kC);
}

GlobalPoseMap make_global(int gw, int gh, std::size_t k) {
    GlobalPoseMap g;
    g.grid = GridSpec{16, gw, gh};
    g.k = k;
    g.anchors = {{6, 12}, {3, 6}};
    g.P = Tensor({2, g.channels(), static_cast<std::size_t>(gh),
                  static_cast<std::size_t>(gw)});
    g.Wp = Tensor(g.P.dims());
    return g;
}

void put_candidate(GlobalPoseMap& g, int a, int u, int v, double obj,
                   double tx, double ty, double tw, double th) {
    g.P(a, GlobalPoseMap::kObj, v, u) = obj;
    g.P(a, GlobalPoseMap::kTx, v, u) = tx;
    g.P(a, GlobalPoseMap::kTy, v, u) = ty;
    g.P(a, GlobalPoseMap::kTw, v, u) = tw;
    g.P(a, GlobalPoseMap::kTh, v, u) = th;
    for (std::size_t j = 0; j < g.k; ++j) {
        g.P(a, GlobalPoseMap::part_channel(static_cast<int>(j), 2), v, u) =
            2.0;
    }
}

TEST(DecodeGlobal, SingleAnchorRoundTrip) {
    GlobalPoseMap g = make_global(14, 14, 2);
    put_candidate(g, 0, 6, 6, 1.0, 0.5, 0.5, 0.0, 0.0);
    const auto dets = decode_global_poses(g, FusionConfig{});
    ASSERT_EQ(dets.size(), 1u);
    EXPECT_DOUBLE_EQ(dets[0].score, 1.0);
    EXPECT_DOUBLE_EQ(dets[0].bbox.center_x(), 6.5 * 16);
    EXPECT_DOUBLE_EQ(dets[0].bbox.width(), 6 * 16);
    EXPECT_DOUBLE_EQ(dets[0].bbox.height(), 12 * 16);
}

TEST(DecodeGlobal, IdenticalCandidatesCollapseUnderNms) {
    GlobalPoseMap g = make_global(14, 14, 2);
    // same box on both anchors of one cell (tw/th compensate)
    put_candidate(g, 0, 6, 6, 1.0, 0.5, 0.5, 0.0, 0.0);
    put_candidate(g, 1, 6, 6, 0.9, 0.5, 0.5, std::log(2.0), std::log(2.0));
    const auto dets = decode_global_poses(g, FusionConfig{});
    ASSERT_EQ(dets.size(), 1u);
    EXPECT_DOUBLE_EQ(dets[0].score, 1.0);  // higher score survives
}

TEST(DecodeGlobal, ModerateOverlapKeepsBoth) {
    // two boxes, IOU = 0.3 exactly: 40x40 at x offset 21.538...
    GlobalPoseMap g = make_global(14, 14, 2);
    const double aw = 6 * 16, ah = 12 * 16;
    // box A: center (40, 100), 40x40
    put_candidate(g, 0, 2, 6, 1.0, 40.0 / 16 - 2, 100.0 / 16 - 6,
                  std::log(40.0 / aw), std::log(40.0 / ah));
    const double offset = 40.0 - 40.0 * 0.3 * 2 / (1 + 0.3);
    put_candidate(g, 0, 3, 6, 0.8, (40.0 + offset) / 16 - 3,
                  100.0 / 16 - 6, std::log(40.0 / aw), std::log(40.0 / ah));
    const auto dets = decode_global_poses(g, FusionConfig{});
    ASSERT_EQ(dets.size(), 2u);
    EXPECT_NEAR(iou(dets[0].bbox, dets[1].bbox), 0.3, 1e-9);

    FusionConfig tight;
    tight.nms_iou = 0.1;
    EXPECT_EQ(decode_global_poses(g, tight).size(), 1u);
}

TEST(DecodeFull, EmptyMapsGiveEmptyResult) {
    GlobalPoseMap g = make_global(14, 14, 2);
    PartMaps m = make_maps(28, 28, 2);
    const auto dets = decode_full(g, m, CameraIntrinsics{230, 230, 111.5, 111.5},
                                  [] {
                                      Skeleton s;
                                      s.k = 2;
                                      s.names = {"a", "b"};
                                      s.head_pair = {0, 1};
                                      return s;
                                  }(),
                                  FusionConfig{});
    EXPECT_TRUE(dets.empty());
}

// Two people, the rear one's right hand directly behind the front one's:
// the z-buffered depth map disagrees with the rear hand's own depth, the
// visibility attribute fires, and the decode must fall back to the global
// prediction for that part (conflict case C).
TEST(DecodeFull, SameTypeOcclusionResolvedThroughGlobalDepth) {
    const Skeleton skel = default_skeleton();
    const CameraIntrinsics cam{230, 230, 111.5, 111.5};

    auto blob_pose = [&](double cx, double cy, double z) {
        Pose p(skel.k);
        for (std::size_t j = 0; j < skel.k; ++j) {
            const double ang = 2.0 * 3.14159265 * j / skel.k;
            p.parts[j] = PartLabel{cx + 28 * std::cos(ang),
                                   cy + 40 * std::sin(ang), z, true, true};
        }
        return p;
    };
    Pose front = blob_pose(60, 100, 2.0);
    Pose rear = blob_pose(168, 100, 2.8);
    front.parts[6] = PartLabel{112.0, 100.0, 2.0, true, true};
    rear.parts[6] = PartLabel{112.5, 100.3, 2.8, true, true};

    const DepthImage raw(224, 224);
    const std::vector<Pose> poses = {front, rear};
    const EncodedMaps gt = encode_all(poses, raw, skel, EncoderConfig{});
    ASSERT_EQ(gt.collisions, 0u);

    const auto dets = decode_full(gt.global, gt.parts, cam, skel,
                                  FusionConfig{});
    ASSERT_EQ(dets.size(), 2u);
    const FusedDetection* rear_det = nullptr;
    const FusedDetection* front_det = nullptr;
    for (const auto& d : dets) {
        if (d.det.bbox.center_x() > 112)
            rear_det = &d;
        else
            front_det = &d;
    }
    ASSERT_NE(rear_det, nullptr);
    ASSERT_NE(front_det, nullptr);

    EXPECT_EQ(rear_det->modes[6], PartMode::kC);
    EXPECT_NEAR(rear_det->det.pose.parts[6].x, 112.5, 1e-9);
    EXPECT_NEAR(rear_det->det.pose.parts[6].y, 100.3, 1e-9);
    EXPECT_NEAR(rear_det->det.pose.parts[6].z, 2.8, 1e-9);
    EXPECT_FALSE(rear_det->det.pose.parts[6].visible);

    EXPECT_EQ(front_det->modes[6], PartMode::kB);
    // a few cells of the rear hand's disk sit inside the front mask, so
    // the fused depth only approximates the front hand
    EXPECT_NEAR(front_det->det.pose.parts[6].z, 2.0, 0.05);
}

}  // namespace
}  // namespace popparts
