// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#include "popparts/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "popparts/rng.hpp"

namespace popparts {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Vec3 {
    double x, y, z;
};

Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
}
Vec3 operator*(const Vec3& a, double s) { return {a.x * s, a.y * s, a.z * s}; }
double dot(const Vec3& a, const Vec3& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

// Nearest positive hit parameter of the ray t*d (origin at the camera)
// against a capsule, or +inf. d need not be normalized; with d.z == 1 the
// parameter equals the hit's depth.
double ray_capsule(const Vec3& d, const Vec3& a, const Vec3& b, double r) {
    double best = kInf;

    auto sphere = [&](const Vec3& c) {
        const double dd = dot(d, d);
        const double dc = dot(d, c);
        const double disc = dc * dc - dd * (dot(c, c) - r * r);
        if (disc < 0) return;
        const double t = (dc - std::sqrt(disc)) / dd;
        if (t > 0 && t < best) best = t;
    };
    sphere(a);
    sphere(b);

    const Vec3 ba = b - a;
    const double baba = dot(ba, ba);
    if (baba > 1e-12) {
        // infinite cylinder, then clip to the segment
        const Vec3 m = d - ba * (dot(d, ba) / baba);
        const Vec3 oa{-a.x, -a.y, -a.z};
        const Vec3 n = oa - ba * (dot(oa, ba) / baba);
        const double qa = dot(m, m);
        if (qa > 1e-12) {
            const double qb = 2.0 * dot(m, n);
            const double qc = dot(n, n) - r * r;
            const double disc = qb * qb - 4.0 * qa * qc;
            if (disc >= 0) {
                const double t = (-qb - std::sqrt(disc)) / (2.0 * qa);
                if (t > 0 && t < best) {
                    const double axial = dot(Vec3{d.x * t - a.x, d.y * t - a.y,
                                                  d.z * t - a.z},
                                             ba);
                    if (axial >= 0 && axial <= baba) best = t;
                }
            }
        }
    }
    return best;
}

struct PixelRect {
    int x0, y0, x1, y1;  // inclusive
    bool empty() const { return x0 > x1 || y0 > y1; }
};

// Conservative screen rect of a capsule.
PixelRect capsule_rect(const Point3D& a, const Point3D& b, double r,
                       const CameraIntrinsics& cam, int w, int h) {
    double x0 = kInf, y0 = kInf, x1 = -kInf, y1 = -kInf;
    for (const Point3D* p : {&a, &b}) {
        const double zn = std::max(p->z - r, 0.05);
        const double px = cam.cx + cam.fx * p->x / zn;
        const double py = cam.cy + cam.fy * p->y / zn;
        const double rx = cam.fx * r / zn + 2.0;
        const double ry = cam.fy * r / zn + 2.0;
        x0 = std::min(x0, px - rx);
        x1 = std::max(x1, px + rx);
        y0 = std::min(y0, py - ry);
        y1 = std::max(y1, py + ry);
    }
    return PixelRect{std::max(0, static_cast<int>(std::floor(x0))),
                     std::max(0, static_cast<int>(std::floor(y0))),
                     std::min(w - 1, static_cast<int>(std::ceil(x1))),
                     std::min(h - 1, static_cast<int>(std::ceil(y1)))};
}

Vec3 pixel_ray(int px, int py, const CameraIntrinsics& cam) {
    return Vec3{(px - cam.cx) / cam.fx, (py - cam.cy) / cam.fy, 1.0};
}

double own_surface_t(const FigureSpec& fig, const Skeleton& skeleton,
                     const Vec3& ray) {
    double best = kInf;
    for (std::size_t e = 0; e < skeleton.edges.size(); ++e) {
        const auto& [i0, i1] = skeleton.edges[e];
        const Vec3 a{fig.joints[i0].x, fig.joints[i0].y, fig.joints[i0].z};
        const Vec3 b{fig.joints[i1].x, fig.joints[i1].y, fig.joints[i1].z};
        best = std::min(best, ray_capsule(ray, a, b, fig.radii[e]));
    }
    return best;
}

}  // namespace

RenderResult render_scene(std::span<const FigureSpec> figures,
                          const Skeleton& skeleton,
                          const CameraIntrinsics& cam, int w, int h,
                          double tol) {
    skeleton.validate();
    cam.validate();
    for (const FigureSpec& f : figures) {
        if (f.joints.size() != skeleton.k)
            throw InvariantError("render_scene: joint count != skeleton k");
        if (f.radii.size() != skeleton.edges.size())
            throw InvariantError("render_scene: radii count != edge count");
    }

    const std::size_t npx = static_cast<std::size_t>(w) * h;
    std::vector<double> tbuf(npx, kInf);
    std::vector<int> owner(npx, -1);

    for (std::size_t fi = 0; fi < figures.size(); ++fi) {
        const FigureSpec& fig = figures[fi];
        for (std::size_t e = 0; e < skeleton.edges.size(); ++e) {
            const auto& [i0, i1] = skeleton.edges[e];
            const Point3D& ja = fig.joints[i0];
            const Point3D& jb = fig.joints[i1];
            const PixelRect rect = capsule_rect(ja, jb, fig.radii[e], cam, w,
                                                h);
            if (rect.empty()) continue;
            const Vec3 a{ja.x, ja.y, ja.z};
            const Vec3 b{jb.x, jb.y, jb.z};
            for (int py = rect.y0; py <= rect.y1; ++py) {
                for (int px = rect.x0; px <= rect.x1; ++px) {
                    const double t = ray_capsule(pixel_ray(px, py, cam), a, b,
                                                 fig.radii[e]);
                    const std::size_t i = static_cast<std::size_t>(py) * w +
                                          px;
                    if (t < tbuf[i]) {  // ties keep the earlier figure
                        tbuf[i] = t;
                        owner[i] = static_cast<int>(fi);
                    }
                }
            }
        }
    }

    RenderResult out;
    out.depth = DepthImage(w, h);
    out.masks.assign(figures.size(), MaskImage(w, h));
    for (std::size_t i = 0; i < npx; ++i) {
        if (owner[i] < 0) continue;
        out.depth.data[i] = std::round(tbuf[i] * 1000.0);
        out.masks[owner[i]].data[i] = 1;
    }

    for (const FigureSpec& fig : figures) {
        Pose pose(skeleton.k);
        for (std::size_t j = 0; j < skeleton.k; ++j) {
            const Point3D& q = fig.joints[j];
            if (!(q.z > 0)) continue;  // behind the camera: unlabeled
            const Point2D px = project(q, cam);
            PartLabel& p = pose.parts[j];
            if (px.x < -0.5 || px.x >= w - 0.5 || px.y < -0.5 ||
                px.y >= h - 0.5)
                continue;  // truncated: unlabeled
            p.x = px.x;
            p.y = px.y;
            p.z = q.z;
            p.labeled = true;
            const int ix = static_cast<int>(std::lround(px.x));
            const int iy = static_cast<int>(std::lround(px.y));
            const double own_t = own_surface_t(fig, skeleton,
                                               pixel_ray(ix, iy, cam));
            const double own_mm =
                std::isinf(own_t) ? q.z * 1000.0 : std::round(own_t * 1000.0);
            const double scene_mm = out.depth.at(ix, iy);
            p.visible = !(scene_mm > 0 && own_mm - scene_mm > tol * 1000.0);
        }
        out.poses.push_back(std::move(pose));
    }
    return out;
}

namespace {

// Template joint offsets for the default 15-part layout, meters relative
// to the torso. y is down, so the head offset is negative.
const Point3D kFigureTemplate[15] = {
    {0.00, -0.45, 0.00},   // head
    {0.00, -0.25, 0.00},   // neck
    {-0.18, -0.22, 0.00},  // r_shoulder
    {0.18, -0.22, 0.00},   // l_shoulder
    {-0.30, -0.02, 0.00},  // r_elbow
    {0.30, -0.02, 0.00},   // l_elbow
    {-0.36, 0.18, 0.00},   // r_hand
    {0.36, 0.18, 0.00},    // l_hand
    {0.00, 0.00, 0.00},    // torso
    {-0.10, 0.22, 0.00},   // r_waist
    {0.10, 0.22, 0.00},    // l_waist
    {-0.11, 0.62, 0.00},   // r_knee
    {0.11, 0.62, 0.00},    // l_knee
    {-0.12, 1.02, 0.00},   // r_foot
    {0.12, 1.02, 0.00},    // l_foot
};

const double kEdgeRadii[14] = {
    0.085,  // head-neck
    0.055, 0.055,  // neck-shoulders
    0.045, 0.045,  // upper arms
    0.040, 0.040,  // forearms
    0.110,         // trunk
    0.090, 0.090,  // torso-waists
    0.060, 0.060,  // thighs
    0.045, 0.045,  // shins
};

enum Stream : std::uint64_t {
    kStreamRoot = 1,
    kStreamPose = 2,
    kStreamHeat = 10,
    kStreamDepth = 11,
    kStreamDispX = 12,
    kStreamDispY = 13,
    kStreamGlobal = 14,
    kStreamBoundary = 20,
};

std::uint64_t figure_stream(std::uint64_t base, int figure) {
    return hash_mix(base + 1000003ull * static_cast<std::uint64_t>(figure));
}

}  // namespace

std::vector<FigureSpec> sample_random_scene(std::uint64_t seed,
                                            const SceneParams& params,
                                            const Skeleton& skeleton,
                                            const CameraIntrinsics& cam,
                                            int w, int h) {
    if (params.n_figures < 0)
        throw InvariantError("sample_random_scene: n_figures must be >= 0");
    if (skeleton.k != 15 || skeleton.edges.size() != 14)
        throw InvariantError(
            "sample_random_scene: requires the 15-part default layout");

    const CounterRng rng(seed);
    std::vector<FigureSpec> figures;
    std::vector<Point3D> roots;
    std::vector<BBox> boxes;  // projected, for placement rejection
    std::vector<std::vector<Point2D>> joint_px;  // projected joints per figure

    for (int f = 0; f < params.n_figures; ++f) {
        RngStream js(rng, figure_stream(kStreamPose, f));
        RngStream rs(rng, figure_stream(kStreamRoot, f));

        bool placed = false;
        Point3D root;
        std::vector<Point3D> offsets(15);
        double scale = 1.0;

        // A few shape rounds; each draws root-relative joint offsets from
        // jitter, yaw and a scale factor, then searches for a root.
        for (int round = 0; round < 3 && !placed; ++round) {
            const double yaw = js.uniform(-std::numbers::pi, std::numbers::pi);
            scale = js.uniform(0.92, 1.08);
            const double cy = std::cos(yaw), sy = std::sin(yaw);
            for (int j = 0; j < 15; ++j) {
                Point3D p = kFigureTemplate[j];
                p.x *= scale;
                p.y *= scale;
                p.x += params.pose_jitter * js.gaussian();
                p.y += params.pose_jitter * js.gaussian();
                p.z += params.pose_jitter * js.gaussian();
                offsets[j] = Point3D{p.x * cy + p.z * sy, p.y,
                                     -p.x * sy + p.z * cy};
            }
            // jitter must not collapse the head segment
            offsets[0].y = std::min(offsets[0].y, offsets[1].y - 0.12);

            auto project_joints = [&](const Point3D& r) {
                std::vector<Point2D> px(offsets.size());
                for (std::size_t j = 0; j < offsets.size(); ++j) {
                    const Point3D& off = offsets[j];
                    const double z = r.z + off.z;
                    px[j] = Point2D{cam.cx + cam.fx * (r.x + off.x) / z,
                                    cam.cy + cam.fy * (r.y + off.y) / z};
                }
                return px;
            };
            auto joints_box = [](const std::vector<Point2D>& px) {
                double x0 = kInf, y0 = kInf, x1 = -kInf, y1 = -kInf;
                for (const Point2D& p : px) {
                    x0 = std::min(x0, p.x);
                    x1 = std::max(x1, p.x);
                    y0 = std::min(y0, p.y);
                    y1 = std::max(y1, p.y);
                }
                const double pad =
                    kDefaultBBoxMargin * std::max(x1 - x0, y1 - y0);
                return BBox{x0 - pad, y0 - pad, x1 + pad, y1 + pad};
            };

            if (params.force_overlap && f > 0) {
                const Point3D& prev = roots.back();
                const double side = rs.uniform() < 0.5 ? -1.0 : 1.0;
                root.x = prev.x + side * rs.uniform(0.10, 0.35);
                root.y = prev.y + rs.uniform(-0.10, 0.10);
                root.z = prev.z + rs.uniform(0.40, 1.00);
                placed = true;
            } else if (f == 0) {
                root.z = rs.uniform(params.z_lo, params.z_hi);
                const double half_w = 0.5 * w * root.z / cam.fx;
                const double half_h = 0.5 * h * root.z / cam.fy;
                root.x = rs.uniform(-0.55, 0.55) * half_w;
                root.y = -0.275 + rs.uniform(-0.15, 0.15) *
                                      std::min(1.0, half_h / 1.5);
                placed = true;
            } else {
                // Placements must stay recoverable: bbox overlap low enough
                // for NMS, distinct anchor cells, and same-type parts far
                // enough apart that fusion masks stay single-instance.
                for (int attempt = 0; attempt < 60 && !placed; ++attempt) {
                    root.z = rs.uniform(params.z_lo, params.z_hi);
                    const double half_w = 0.5 * w * root.z / cam.fx;
                    const double half_h = 0.5 * h * root.z / cam.fy;
                    root.x = rs.uniform(-0.55, 0.55) * half_w;
                    root.y = -0.275 + rs.uniform(-0.15, 0.15) *
                                          std::min(1.0, half_h / 1.5);
                    const auto px = project_joints(root);
                    const BBox box = joints_box(px);
                    bool ok = true;
                    for (std::size_t o = 0; o < boxes.size() && ok; ++o) {
                        const BBox& other = boxes[o];
                        if (iou(box, other) > 0.30) ok = false;
                        const double iw = std::min(box.x_max, other.x_max) -
                                          std::max(box.x_min, other.x_min);
                        const double ih = std::min(box.y_max, other.y_max) -
                                          std::max(box.y_min, other.y_min);
                        const double inter =
                            std::max(0.0, iw) * std::max(0.0, ih);
                        const double min_area =
                            std::min(box.area(), other.area());
                        if (min_area > 0 && inter / min_area > 0.5)
                            ok = false;  // mostly nested
                        if (std::hypot(box.center_x() - other.center_x(),
                                       box.center_y() - other.center_y()) <
                            28.0)
                            ok = false;  // same anchor cell risk
                        for (std::size_t j = 0; j < px.size() && ok; ++j) {
                            if (std::hypot(px[j].x - joint_px[o][j].x,
                                           px[j].y - joint_px[o][j].y) < 44.0)
                                ok = false;
                        }
                    }
                    placed = ok;
                }
            }
        }
        if (!placed) continue;  // no room left: drop the figure

        roots.push_back(root);
        std::vector<Point2D> px(15);
        for (int j = 0; j < 15; ++j) {
            const double z = root.z + offsets[j].z;
            px[j] = Point2D{cam.cx + cam.fx * (root.x + offsets[j].x) / z,
                            cam.cy + cam.fy * (root.y + offsets[j].y) / z};
        }
        double x0 = kInf, y0 = kInf, x1 = -kInf, y1 = -kInf;
        for (const Point2D& p : px) {
            x0 = std::min(x0, p.x);
            x1 = std::max(x1, p.x);
            y0 = std::min(y0, p.y);
            y1 = std::max(y1, p.y);
        }
        const double pad = kDefaultBBoxMargin * std::max(x1 - x0, y1 - y0);
        joint_px.push_back(std::move(px));
        boxes.push_back(BBox{x0 - pad, y0 - pad, x1 + pad, y1 + pad});

        FigureSpec fig;
        fig.joints.resize(15);
        fig.radii.assign(kEdgeRadii, kEdgeRadii + 14);
        for (double& r : fig.radii) r *= scale;
        for (int j = 0; j < 15; ++j)
            fig.joints[j] = Point3D{root.x + offsets[j].x,
                                    root.y + offsets[j].y,
                                    root.z + offsets[j].z};
        figures.push_back(std::move(fig));
    }
    return figures;
}

StagePredictions oracle_predict(const EncodedMaps& gt,
                                const OracleNoise& noise, int stages) {
    if (stages < 1) throw InvariantError("oracle_predict: stages must be >= 1");
    const CounterRng rng(noise.seed);
    StagePredictions out;
    out.stages.resize(stages);

    auto noisy_copy = [&](const Tensor& src, double sigma,
                          std::uint64_t stream) {
        Tensor t = src;
        if (sigma > 0)
            for (std::size_t i = 0; i < t.size(); ++i)
                t[i] += sigma * rng.gaussian(stream, i);
        return t;
    };

    for (int s = 0; s < stages; ++s) {
        StageMaps& st = out.stages[s];
        const std::uint64_t tag = static_cast<std::uint64_t>(s) << 32;
        st.H = noisy_copy(gt.parts.H, noise.heat_sigma, kStreamHeat + tag);
        st.D = noisy_copy(gt.parts.D, noise.depth_sigma, kStreamDepth + tag);
        st.X = noisy_copy(gt.parts.X, noise.disp_sigma, kStreamDispX + tag);
        st.Y = noisy_copy(gt.parts.Y, noise.disp_sigma, kStreamDispY + tag);
        for (std::size_t i = 0; i < st.H.size(); ++i)
            st.H[i] = std::clamp(st.H[i], 0.0, 1.0);
    }

    out.P = noisy_copy(gt.global.P, noise.pose_sigma, kStreamGlobal);
    const GlobalPoseMap& g = gt.global;
    const std::size_t cells =
        static_cast<std::size_t>(g.grid.gh) * g.grid.gw;
    for (std::size_t a = 0; a < g.anchors.size(); ++a) {
        auto clamp_channel = [&](int c) {
            double* base = out.P.data() +
                           (a * g.channels() + c) * cells;
            for (std::size_t i = 0; i < cells; ++i)
                base[i] = std::clamp(base[i], 0.0, 1.0);
        };
        clamp_channel(GlobalPoseMap::kObj);
        for (std::size_t j = 0; j < g.k; ++j)
            clamp_channel(GlobalPoseMap::part_channel(static_cast<int>(j), 3));
    }
    return out;
}

void add_boundary_confusion_noise(StagePredictions& pred,
                                  const EncodedMaps& gt, double coeff,
                                  std::uint64_t seed) {
    if (coeff <= 0) return;
    const CounterRng rng(seed);
    const GridSpec& grid = gt.parts.grid;
    const std::size_t k = gt.parts.k();
    const double smooth_step = std::numbers::sqrt2;

    for (std::size_t j = 0; j < k; ++j) {
        // excess discontinuity of the ground-truth field
        Tensor excess({static_cast<std::size_t>(grid.gh),
                       static_cast<std::size_t>(grid.gw)});
        for (int v = 0; v < grid.gh; ++v) {
            for (int u = 0; u < grid.gw; ++u) {
                double jmax = 0;
                const double x0 = gt.parts.X(j, v, u);
                const double y0 = gt.parts.Y(j, v, u);
                const int du[4] = {1, -1, 0, 0};
                const int dv[4] = {0, 0, 1, -1};
                for (int n = 0; n < 4; ++n) {
                    const int uu = u + du[n], vv = v + dv[n];
                    if (!grid.contains(uu, vv)) continue;
                    const double dx = gt.parts.X(j, vv, uu) - x0;
                    const double dy = gt.parts.Y(j, vv, uu) - y0;
                    jmax = std::max(jmax, std::sqrt(dx * dx + dy * dy));
                }
                excess(v, u) = std::max(0.0, jmax - smooth_step);
            }
        }
        // 5x5 max-pool: confusion bleeds over the receptive field
        Tensor spread(excess.dims());
        for (int v = 0; v < grid.gh; ++v) {
            for (int u = 0; u < grid.gw; ++u) {
                double m = 0;
                for (int dv = -2; dv <= 2; ++dv)
                    for (int du = -2; du <= 2; ++du)
                        if (grid.contains(u + du, v + dv))
                            m = std::max(m, excess(v + dv, u + du));
                spread(v, u) = m;
            }
        }
        for (std::size_t s = 0; s < pred.stages.size(); ++s) {
            const std::uint64_t sx =
                hash_mix(kStreamBoundary + (s << 16) + 2 * j);
            const std::uint64_t sy =
                hash_mix(kStreamBoundary + (s << 16) + 2 * j + 1);
            for (int v = 0; v < grid.gh; ++v) {
                for (int u = 0; u < grid.gw; ++u) {
                    const double sigma = coeff * spread(v, u);
                    if (sigma <= 0) continue;
                    const std::uint64_t c =
                        static_cast<std::uint64_t>(v) * grid.gw + u;
                    pred.stages[s].X(j, v, u) += sigma * rng.gaussian(sx, c);
                    pred.stages[s].Y(j, v, u) += sigma * rng.gaussian(sy, c);
                }
            }
        }
    }
}

PartMaps prediction_part_maps(const StagePredictions& pred,
                              const EncodedMaps& gt) {
    if (pred.stages.empty())
        throw InvariantError("prediction_part_maps: no stages");
    PartMaps maps;
    maps.grid = gt.parts.grid;
    const StageMaps& last = pred.stages.back();
    maps.H = last.H;
    maps.D = last.D;
    maps.X = last.X;
    maps.Y = last.Y;
    maps.Wd = gt.parts.Wd;
    maps.Wt = gt.parts.Wt;
    return maps;
}

GlobalPoseMap prediction_global_map(const StagePredictions& pred,
                                    const EncodedMaps& gt) {
    GlobalPoseMap g = gt.global;
    g.P = pred.P;
    return g;
}

}  // namespace popparts
