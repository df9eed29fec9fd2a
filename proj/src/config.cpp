// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#include "popparts/config.hpp"

#include <fstream>
#include <limits>

namespace popparts {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// truncation radius serializes as a number or "inf"
double radius_from_json(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf")
            return std::numeric_limits<double>::infinity();
        throw DataError("config: truncation_radius must be a number or \"inf\"");
    }
    return j.get<double>();
}

ordered_json radius_to_json(double r) {
    if (std::isinf(r)) return ordered_json("inf");
    return ordered_json(r);
}

}  // namespace

void RunConfig::validate() const {
    skeleton.validate();
    camera.validate();
    encoder.validate();
    fusion.validate();
    metrics.validate();
    if (stages < 1) throw InvariantError("config: stages must be >= 1");
    if (threads < 1) throw InvariantError("config: threads must be >= 1");
    if (synth.scenes < 0 || synth.min_figures < 0 ||
        synth.max_figures < synth.min_figures)
        throw InvariantError("config: bad synth figure counts");
    if (!(synth.z_lo > 0) || synth.z_hi < synth.z_lo)
        throw InvariantError("config: bad synth depth range");
    if (!(aug.lo > 0) || aug.hi < aug.lo)
        throw InvariantError("config: bad augmentation range");
    if (noise.heat_sigma < 0 || noise.depth_sigma < 0 ||
        noise.disp_sigma < 0 || noise.pose_sigma < 0)
        throw InvariantError("config: noise sigmas must be >= 0");
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    c.seed = j.value("seed", c.seed);
    c.stages = j.value("stages", c.stages);
    c.threads = j.value("threads", c.threads);

    if (j.contains("camera")) {
        const auto& cj = j["camera"];
        c.camera = CameraIntrinsics{cj.at("fx"), cj.at("fy"), cj.at("cx"),
                                    cj.at("cy")};
    }
    if (j.contains("skeleton")) {
        const auto& sj = j["skeleton"];
        Skeleton s;
        s.k = sj.at("k").get<std::size_t>();
        s.names = sj.at("names").get<std::vector<std::string>>();
        s.flip_pairs.clear();
        for (const auto& p : sj.at("flip_pairs"))
            s.flip_pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
        s.head_pair = {sj.at("head_pair").at(0).get<int>(),
                       sj.at("head_pair").at(1).get<int>()};
        for (const auto& p : sj.at("edges"))
            s.edges.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
        c.skeleton = std::move(s);
    }
    if (j.contains("encoder")) {
        const auto& ej = j["encoder"];
        EncoderConfig& e = c.encoder;
        e.sigma = ej.value("sigma", e.sigma);
        e.disk_radius = ej.value("disk_radius", e.disk_radius);
        if (ej.contains("truncation_radius"))
            e.truncation_radius = radius_from_json(ej["truncation_radius"]);
        if (ej.contains("anchors")) {
            e.anchors.clear();
            for (const auto& a : ej["anchors"])
                e.anchors.emplace_back(a.at(0).get<double>(),
                                       a.at(1).get<double>());
        }
        e.fg_weight = ej.value("fg_weight", e.fg_weight);
        e.bg_weight = ej.value("bg_weight", e.bg_weight);
        e.bbox_margin = ej.value("bbox_margin", e.bbox_margin);
        e.visibility_tol = ej.value("visibility_tol", e.visibility_tol);
    }
    if (j.contains("fusion")) {
        const auto& fj = j["fusion"];
        FusionConfig& f = c.fusion;
        f.mask_half = fj.value("mask_half", f.mask_half);
        f.conf_thresh = fj.value("conf_thresh", f.conf_thresh);
        f.vis_thresh = fj.value("vis_thresh", f.vis_thresh);
        f.nms_iou = fj.value("nms_iou", f.nms_iou);
        f.obj_thresh = fj.value("obj_thresh", f.obj_thresh);
    }
    if (j.contains("metrics")) {
        const auto& mj = j["metrics"];
        MetricConfig& m = c.metrics;
        m.pck2d_factor = mj.value("pck2d_factor", m.pck2d_factor);
        m.pck3d_thresh = mj.value("pck3d_thresh", m.pck3d_thresh);
        m.match_iou = mj.value("match_iou", m.match_iou);
        m.head_fallback = mj.value("head_fallback", m.head_fallback);
        m.bbox_margin = mj.value("bbox_margin", m.bbox_margin);
    }
    if (j.contains("noise")) {
        const auto& nj = j["noise"];
        OracleNoise& n = c.noise;
        n.heat_sigma = nj.value("heat_sigma", n.heat_sigma);
        n.depth_sigma = nj.value("depth_sigma", n.depth_sigma);
        n.disp_sigma = nj.value("disp_sigma", n.disp_sigma);
        n.pose_sigma = nj.value("pose_sigma", n.pose_sigma);
        n.seed = nj.value("seed", n.seed);
    }
    if (j.contains("synth")) {
        const auto& sj = j["synth"];
        SynthConfig& s = c.synth;
        s.width = sj.value("width", s.width);
        s.height = sj.value("height", s.height);
        s.scenes = sj.value("scenes", s.scenes);
        s.min_figures = sj.value("min_figures", s.min_figures);
        s.max_figures = sj.value("max_figures", s.max_figures);
        s.pose_jitter = sj.value("pose_jitter", s.pose_jitter);
        s.z_lo = sj.value("z_lo", s.z_lo);
        s.z_hi = sj.value("z_hi", s.z_hi);
        s.force_overlap = sj.value("force_overlap", s.force_overlap);
        s.boundary_noise = sj.value("boundary_noise", s.boundary_noise);
    }
    if (j.contains("augment")) {
        c.aug.lo = j["augment"].value("range_lo", c.aug.lo);
        c.aug.hi = j["augment"].value("range_hi", c.aug.hi);
    }
    c.validate();
    return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path + ": cannot open");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(path + ": parse error at byte " +
                        std::to_string(e.byte) + ": " + e.what());
    }
    try {
        return from_json(j);
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

ordered_json RunConfig::to_json() const {
    ordered_json j;
    j["seed"] = seed;
    j["stages"] = stages;
    j["threads"] = threads;
    j["camera"] = {{"fx", camera.fx},
                   {"fy", camera.fy},
                   {"cx", camera.cx},
                   {"cy", camera.cy}};
    ordered_json sj;
    sj["k"] = skeleton.k;
    sj["names"] = skeleton.names;
    auto pairs = ordered_json::array();
    for (const auto& [a, b] : skeleton.flip_pairs) pairs.push_back({a, b});
    sj["flip_pairs"] = pairs;
    sj["head_pair"] = {skeleton.head_pair.first, skeleton.head_pair.second};
    auto edges = ordered_json::array();
    for (const auto& [a, b] : skeleton.edges) edges.push_back({a, b});
    sj["edges"] = edges;
    j["skeleton"] = sj;

    auto anchors = ordered_json::array();
    for (const auto& [w, h] : encoder.anchors) anchors.push_back({w, h});
    j["encoder"] = {{"sigma", encoder.sigma},
                    {"disk_radius", encoder.disk_radius},
                    {"truncation_radius", radius_to_json(encoder.truncation_radius)},
                    {"anchors", anchors},
                    {"fg_weight", encoder.fg_weight},
                    {"bg_weight", encoder.bg_weight},
                    {"bbox_margin", encoder.bbox_margin},
                    {"visibility_tol", encoder.visibility_tol}};
    j["fusion"] = {{"mask_half", fusion.mask_half},
                   {"conf_thresh", fusion.conf_thresh},
                   {"vis_thresh", fusion.vis_thresh},
                   {"nms_iou", fusion.nms_iou},
                   {"obj_thresh", fusion.obj_thresh}};
    j["metrics"] = {{"pck2d_factor", metrics.pck2d_factor},
                    {"pck3d_thresh", metrics.pck3d_thresh},
                    {"match_iou", metrics.match_iou},
                    {"head_fallback", metrics.head_fallback},
                    {"bbox_margin", metrics.bbox_margin}};
    j["noise"] = {{"heat_sigma", noise.heat_sigma},
                  {"depth_sigma", noise.depth_sigma},
                  {"disp_sigma", noise.disp_sigma},
                  {"pose_sigma", noise.pose_sigma},
                  {"seed", noise.seed}};
    j["synth"] = {{"width", synth.width},
                  {"height", synth.height},
                  {"scenes", synth.scenes},
                  {"min_figures", synth.min_figures},
                  {"max_figures", synth.max_figures},
                  {"pose_jitter", synth.pose_jitter},
                  {"z_lo", synth.z_lo},
                  {"z_hi", synth.z_hi},
                  {"force_overlap", synth.force_overlap},
                  {"boundary_noise", synth.boundary_noise}};
    j["augment"] = {{"range_lo", aug.lo}, {"range_hi", aug.hi}};
    return j;
}

void RunConfig::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError(path + ": cannot open for writing");
    out << to_json().dump(2) << "\n";
}

}  // namespace popparts
