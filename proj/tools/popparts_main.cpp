// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0
//
// Batch front-end: scene synthesis, ground-truth encoding, decoding,
// augmentation, evaluation, the full round-trip report, and the loss
// gradient check. One JSON config drives every command; flags win over
// config fields. Exit codes: 0 ok, 1 usage, 2 data error, 3 invariant
// violation.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "popparts/augment.hpp"
#include "popparts/config.hpp"
#include "popparts/decoder.hpp"
#include "popparts/geometry.hpp"
#include "popparts/io.hpp"
#include "popparts/loss.hpp"
#include "popparts/pipeline.hpp"
#include "popparts/rng.hpp"
#include "popparts/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace popparts;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> radius;
    std::optional<int> mask_half;
    std::optional<double> conf_thresh, vis_thresh, nms_iou;
    std::optional<std::string> aug_range;
    std::string out;
    std::string format = "json";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--seed", o.seed, "override config seed");
    cmd->add_option("--radius", o.radius,
                    "TPDF truncation radius (number or 'inf')");
    cmd->add_option("--mask-half", o.mask_half, "fusion mask half width");
    cmd->add_option("--conf-thresh", o.conf_thresh, "mode-A confidence cut");
    cmd->add_option("--vis-thresh", o.vis_thresh, "mode-C visibility cut");
    cmd->add_option("--nms-iou", o.nms_iou, "NMS suppression IOU");
    cmd->add_option("--aug-range", o.aug_range, "depth-aug range LO:HI");
    cmd->add_option("--out", o.out, "output path");
    cmd->add_option("--format", o.format, "json or table")
        ->check(CLI::IsMember({"json", "table"}));
}

RunConfig resolve_config(const CommonOpts& o) {
    RunConfig cfg = o.config_path.empty() ? RunConfig{}
                                          : RunConfig::from_file(o.config_path);
    if (o.seed) cfg.seed = *o.seed;
    if (o.radius) {
        if (*o.radius == "inf") {
            cfg.encoder.truncation_radius =
                std::numeric_limits<double>::infinity();
        } else {
            try {
                cfg.encoder.truncation_radius = std::stod(*o.radius);
            } catch (const std::exception&) {
                throw DataError("--radius: expected a number or 'inf'");
            }
        }
    }
    if (o.mask_half) cfg.fusion.mask_half = *o.mask_half;
    if (o.conf_thresh) cfg.fusion.conf_thresh = *o.conf_thresh;
    if (o.vis_thresh) cfg.fusion.vis_thresh = *o.vis_thresh;
    if (o.nms_iou) cfg.fusion.nms_iou = *o.nms_iou;
    if (o.aug_range) {
        const auto pos = o.aug_range->find(':');
        if (pos == std::string::npos)
            throw DataError("--aug-range: expected LO:HI");
        try {
            cfg.aug.lo = std::stod(o.aug_range->substr(0, pos));
            cfg.aug.hi = std::stod(o.aug_range->substr(pos + 1));
        } catch (const std::exception&) {
            throw DataError("--aug-range: expected LO:HI numbers");
        }
    }
    cfg.validate();
    return cfg;
}

void emit(const CommonOpts& o, const std::string& text) {
    if (o.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(o.out, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError(o.out + ": cannot open for writing");
    f << text;
}

ordered_json eval_pair_json(const EvalReport& r2, const EvalReport& r3) {
    ordered_json j;
    j["pck_2d"] = r2.mean_pck;
    j["pck_3d"] = r3.mean_pck;
    j["map_2d"] = r2.map;
    j["map_3d"] = r3.map;
    j["per_part"] = {{"pck_2d", r2.per_part_pck},
                     {"pck_3d", r3.per_part_pck},
                     {"ap_2d", r2.per_part_ap},
                     {"ap_3d", r3.per_part_ap}};
    j["counts"] = {{"matched", r2.matched},
                   {"unmatched_preds", r2.unmatched_preds},
                   {"missed_gts", r2.missed_gts}};
    return j;
}

std::string table_header() {
    return "                2D PCK   3D PCK   2D mAP   3D mAP\n";
}

std::string table_row(const std::string& name, const EvalReport& r2,
                      const EvalReport& r3) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-14s %8.4f %8.4f %8.4f %8.4f\n",
                  name.c_str(), r2.mean_pck, r3.mean_pck, r2.map, r3.map);
    return buf;
}

int cmd_synth(const CommonOpts& o, int scenes_override) {
    RunConfig cfg = resolve_config(o);
    if (scenes_override > 0) cfg.synth.scenes = scenes_override;
    const fs::path dir = o.out.empty() ? fs::path("synth_out")
                                       : fs::path(o.out);
    fs::create_directories(dir);
    for (int i = 0; i < cfg.synth.scenes; ++i) {
        const std::uint64_t sseed = scene_seed(cfg.seed, i);
        const CounterRng rng(sseed);
        RngStream pick(rng, 42);
        SceneParams params;
        params.n_figures =
            pick.uniform_int(cfg.synth.min_figures, cfg.synth.max_figures);
        params.pose_jitter = cfg.synth.pose_jitter;
        params.z_lo = cfg.synth.z_lo;
        params.z_hi = cfg.synth.z_hi;
        params.force_overlap = cfg.synth.force_overlap;
        const auto figures =
            sample_random_scene(sseed, params, cfg.skeleton, cfg.camera,
                                cfg.synth.width, cfg.synth.height);
        const RenderResult render =
            render_scene(figures, cfg.skeleton, cfg.camera, cfg.synth.width,
                         cfg.synth.height, cfg.encoder.visibility_tol);
        char name[64];
        std::snprintf(name, sizeof(name), "scene_%04d", i);
        write_depth_pgm((dir / (std::string(name) + "_depth.pgm")).string(),
                        render.depth);
        save_pose_file((dir / (std::string(name) + "_poses.json")).string(),
                       cfg.skeleton, render.poses);
        for (std::size_t m = 0; m < render.masks.size(); ++m) {
            char mask_name[80];
            std::snprintf(mask_name, sizeof(mask_name), "%s_mask_%zu.pgm",
                          name, m);
            write_mask_pgm((dir / mask_name).string(), render.masks[m]);
        }
    }
    return 0;
}

int cmd_encode(const CommonOpts& o, const std::string& depth_path,
               const std::string& poses_path) {
    const RunConfig cfg = resolve_config(o);
    const DepthImage depth = read_depth_pgm(depth_path);
    const PoseFile poses = load_pose_file(poses_path);
    const EncodedMaps maps =
        encode_all(poses.poses, depth, poses.skeleton, cfg.encoder);
    const std::string out = o.out.empty() ? "maps.ptsr" : o.out;
    write_tensor_file(out, encoded_maps_to_file(maps, depth.width,
                                                depth.height));
    return 0;
}

int cmd_decode(const CommonOpts& o, const std::string& maps_path) {
    const RunConfig cfg = resolve_config(o);
    const EncodedMaps maps = encoded_maps_from_file(read_tensor_file(maps_path));
    if (maps.global.k != cfg.skeleton.k)
        throw DataError(maps_path + ": map K=" + std::to_string(maps.global.k) +
                        " does not match skeleton K=" +
                        std::to_string(cfg.skeleton.k));
    const auto dets = decode_full(maps.global, maps.parts, cfg.camera,
                                  cfg.skeleton, cfg.fusion);
    const std::string out = o.out.empty() ? "poses.json" : o.out;
    save_detections(out, cfg.skeleton, dets);
    return 0;
}

int cmd_eval(const CommonOpts& o, const std::string& pred_path,
             const std::string& gt_path) {
    const RunConfig cfg = resolve_config(o);
    const DetectionFile preds = load_detections(pred_path);
    const PoseFile gts = load_pose_file(gt_path);
    if (preds.skeleton.k != gts.skeleton.k)
        throw DataError("eval: prediction and GT skeletons disagree");
    const SceneSample scene{preds.detections, gts.poses};
    const EvalReport r2 = evaluate({&scene, 1}, gts.skeleton, cfg.camera,
                                   cfg.metrics, Space::k2D);
    const EvalReport r3 = evaluate({&scene, 1}, gts.skeleton, cfg.camera,
                                   cfg.metrics, Space::k3D);
    if (o.format == "table") {
        emit(o, table_header() + table_row("overall", r2, r3));
    } else {
        emit(o, eval_pair_json(r2, r3).dump(2) + "\n");
    }
    return 0;
}

struct AugmentOpts {
    std::string mode;
    std::vector<std::string> depth, mask, poses;
    std::string bg;
    double angle = 0;
    std::optional<double> a;
    std::string crop, out_size;
    std::string out_prefix = "augmented";
};

int cmd_augment(const CommonOpts& o, const AugmentOpts& a) {
    const RunConfig cfg = resolve_config(o);
    if (a.depth.empty()) throw DataError("augment: need at least one --depth");
    if (a.poses.empty()) throw DataError("augment: need at least one --poses");

    const DepthImage depth = read_depth_pgm(a.depth[0]);
    const PoseFile pose_file = load_pose_file(a.poses[0]);
    const std::string out_pgm = a.out_prefix + ".pgm";
    const std::string out_json = a.out_prefix + ".json";

    if (a.mode == "hflip") {
        const AugmentedScene s = hflip(depth, pose_file.poses,
                                       pose_file.skeleton);
        write_depth_pgm(out_pgm, s.depth);
        save_pose_file(out_json, pose_file.skeleton, s.poses);
        if (!a.mask.empty())
            write_mask_pgm(a.out_prefix + "_mask.pgm",
                           hflip_mask(read_mask_pgm(a.mask[0])));
        return 0;
    }
    if (a.mode == "rotate") {
        BBox crop{0, 0, static_cast<double>(depth.width),
                  static_cast<double>(depth.height)};
        if (!a.crop.empty()) {
            double v[4];
            if (std::sscanf(a.crop.c_str(), "%lf:%lf:%lf:%lf", &v[0], &v[1],
                            &v[2], &v[3]) != 4)
                throw DataError("--crop: expected x0:y0:x1:y1");
            crop = BBox{v[0], v[1], v[2], v[3]};
        }
        int out_w = depth.width, out_h = depth.height;
        if (!a.out_size.empty()) {
            if (std::sscanf(a.out_size.c_str(), "%dx%d", &out_w, &out_h) != 2)
                throw DataError("--out-size: expected WxH");
        }
        const AugmentedScene s = rotate_crop(depth, pose_file.poses, a.angle,
                                             crop, out_w, out_h);
        write_depth_pgm(out_pgm, s.depth);
        save_pose_file(out_json, pose_file.skeleton, s.poses);
        return 0;
    }
    if (a.mode == "rescale") {
        double scale;
        if (a.a) {
            scale = *a.a;
        } else {
            const CounterRng rng(cfg.seed);
            scale = cfg.aug.lo + rng.uniform(7, 0) * (cfg.aug.hi - cfg.aug.lo);
        }
        const RescaledScene s =
            depth_rescale(depth, pose_file.poses, cfg.camera, scale);
        write_depth_pgm(out_pgm, s.image);
        save_pose_file(out_json, pose_file.skeleton, s.poses);
        return 0;
    }
    if (a.mode == "background" || a.mode == "compose") {
        if (a.bg.empty()) throw DataError("augment: --bg required");
        if (a.mask.size() != a.depth.size() || a.poses.size() != a.depth.size())
            throw DataError(
                "augment: need matching --depth/--mask/--poses counts");
        const DepthImage bg = read_depth_pgm(a.bg);
        std::vector<SegmentedSample> samples;
        for (std::size_t i = 0; i < a.depth.size(); ++i) {
            SegmentedSample s;
            s.depth = i == 0 ? depth : read_depth_pgm(a.depth[i]);
            s.mask = read_mask_pgm(a.mask[i]);
            const PoseFile pf =
                i == 0 ? pose_file : load_pose_file(a.poses[i]);
            if (pf.poses.empty())
                throw DataError(a.poses[i] + ": no poses");
            s.pose = pf.poses[0];
            samples.push_back(std::move(s));
        }
        const AugmentedScene s =
            a.mode == "background"
                ? composite_background(samples[0], bg)
                : composite_multiperson(samples, bg,
                                        cfg.encoder.visibility_tol);
        write_depth_pgm(out_pgm, s.depth);
        save_pose_file(out_json, pose_file.skeleton, s.poses);
        return 0;
    }
    throw DataError("augment: unknown mode '" + a.mode + "'");
}

int cmd_roundtrip(const CommonOpts& o) {
    const RunConfig cfg = resolve_config(o);
    const RoundtripReport rep = run_roundtrip(cfg);
    if (o.format == "table") {
        std::string t = table_header();
        t += table_row("fused", rep.fused_2d, rep.fused_3d);
        t += table_row("global-only", rep.global_2d, rep.global_3d);
        char buf[96];
        std::snprintf(buf, sizeof(buf), "scenes %d  collisions %zu\n",
                      rep.scenes, rep.collisions);
        emit(o, t + buf);
    } else {
        ordered_json j;
        j["seed"] = cfg.seed;
        j["scenes"] = rep.scenes;
        j["collisions"] = rep.collisions;
        j["fused"] = eval_pair_json(rep.fused_2d, rep.fused_3d);
        j["global"] = eval_pair_json(rep.global_2d, rep.global_3d);
        emit(o, j.dump(2) + "\n");
    }
    return 0;
}

int cmd_gradcheck(const CommonOpts& o, int instances) {
    const RunConfig cfg = resolve_config(o);
    const double err = run_gradient_check(cfg.seed, instances);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max relative gradient error: %.3e\n",
                  err);
    emit(o, buf);
    if (!(err < 1e-4))
        throw InvariantError("gradient check failed: " + std::to_string(err));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"popparts: multi-person 3D pose representation toolkit"};
    app.require_subcommand(1);

    CommonOpts common;
    AugmentOpts aug;
    std::string depth_path, poses_path, maps_path, pred_path, gt_path;
    int scenes_override = 0;
    int gradcheck_instances = 50;

    auto* synth = app.add_subcommand("synth", "render seeded scenes to files");
    add_common(synth, common);
    synth->add_option("--scenes", scenes_override, "number of scenes");

    auto* encode = app.add_subcommand("encode",
                                      "poses + depth -> ground-truth maps");
    add_common(encode, common);
    encode->add_option("--depth", depth_path, "input 16-bit PGM")->required();
    encode->add_option("--poses", poses_path, "input pose JSON")->required();

    auto* decode = app.add_subcommand("decode", "maps -> fused poses JSON");
    add_common(decode, common);
    decode->add_option("--maps", maps_path, "input PTSR maps")->required();

    auto* eval = app.add_subcommand("eval", "score predictions against GT");
    add_common(eval, common);
    eval->add_option("--pred", pred_path, "predicted poses JSON")->required();
    eval->add_option("--gt", gt_path, "ground-truth poses JSON")->required();

    auto* augment = app.add_subcommand("augment", "augment a sample");
    add_common(augment, common);
    augment->add_option("--mode", aug.mode,
                        "hflip|rotate|rescale|background|compose")
        ->required();
    augment->add_option("--depth", aug.depth, "depth PGM (repeatable)");
    augment->add_option("--mask", aug.mask, "mask PGM (repeatable)");
    augment->add_option("--poses", aug.poses, "pose JSON (repeatable)");
    augment->add_option("--bg", aug.bg, "background depth PGM");
    augment->add_option("--angle", aug.angle, "rotation degrees");
    augment->add_option("--a", aug.a, "explicit depth-rescale factor");
    augment->add_option("--crop", aug.crop, "crop x0:y0:x1:y1");
    augment->add_option("--out-size", aug.out_size, "output WxH");
    augment->add_option("--out-prefix", aug.out_prefix, "output prefix");

    auto* roundtrip = app.add_subcommand(
        "roundtrip", "synth -> encode -> oracle -> decode -> metrics");
    add_common(roundtrip, common);

    auto* gradcheck = app.add_subcommand("gradcheck",
                                         "finite-difference gradient check");
    add_common(gradcheck, common);
    gradcheck->add_option("--instances", gradcheck_instances,
                          "random instances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*synth) return cmd_synth(common, scenes_override);
        if (*encode) return cmd_encode(common, depth_path, poses_path);
        if (*decode) return cmd_decode(common, maps_path);
        if (*eval) return cmd_eval(common, pred_path, gt_path);
        if (*augment) return cmd_augment(common, aug);
        if (*roundtrip) return cmd_roundtrip(common);
        if (*gradcheck) return cmd_gradcheck(common, gradcheck_instances);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
