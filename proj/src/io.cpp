// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#include "popparts/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace popparts {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw DataError(path + ": " + msg);
}

std::string read_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_binary(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(path, "cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(path, "write failed");
}

// PGM header tokenizer: skips whitespace and '#' comments.
struct PgmParser {
    const std::string& path;
    const std::string& bytes;
    std::size_t pos = 0;

    int next_int() {
        while (pos < bytes.size()) {
            const char c = bytes[pos];
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos;
            } else {
                break;
            }
        }
        if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(
                                       bytes[pos])))
            fail(path, "expected integer at offset " + std::to_string(pos));
        long v = 0;
        while (pos < bytes.size() &&
               std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1 << 30) fail(path, "integer overflow in header");
            ++pos;
        }
        return static_cast<int>(v);
    }
};

struct PgmHeader {
    int width, height, maxval;
    std::size_t data_offset;
};

PgmHeader parse_pgm_header(const std::string& path, const std::string& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
        fail(path, "expected 'P5' magic at offset 0");
    PgmParser p{path, bytes, 2};
    PgmHeader h;
    h.width = p.next_int();
    h.height = p.next_int();
    h.maxval = p.next_int();
    if (h.width <= 0 || h.height <= 0)
        fail(path, "non-positive dimensions in header");
    if (p.pos >= bytes.size() ||
        !std::isspace(static_cast<unsigned char>(bytes[p.pos])))
        fail(path, "expected single whitespace after maxval at offset " +
                       std::to_string(p.pos));
    h.data_offset = p.pos + 1;
    return h;
}

void append_u16be(std::string& out, unsigned v) {
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

void append_u16le(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void append_u32le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_f32le(std::string& out, float v) {
    std::uint32_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    append_u32le(out, bits);
}

struct Cursor {
    const std::string& path;
    const std::string& bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > bytes.size())
            fail(path, "truncated at offset " + std::to_string(pos));
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes[pos++]);
    }
    std::uint16_t u16le() {
        need(2);
        const auto* d = reinterpret_cast<const unsigned char*>(bytes.data()) +
                        pos;
        pos += 2;
        return static_cast<std::uint16_t>(d[0] | (d[1] << 8));
    }
    std::uint32_t u32le() {
        need(4);
        const auto* d = reinterpret_cast<const unsigned char*>(bytes.data()) +
                        pos;
        pos += 4;
        return static_cast<std::uint32_t>(d[0]) | (d[1] << 8) | (d[2] << 16) |
               (static_cast<std::uint32_t>(d[3]) << 24);
    }
    float f32le() {
        const std::uint32_t bits = u32le();
        float v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
};

json parse_json_file(const std::string& path) {
    const std::string bytes = read_binary(path);
    try {
        return json::parse(bytes);
    } catch (const json::parse_error& e) {
        fail(path, "parse error at byte " + std::to_string(e.byte) + ": " +
                       e.what());
    }
}

Skeleton skeleton_from_json(const std::string& path, const json& j) {
    Skeleton s;
    try {
        s.k = j.at("k").get<std::size_t>();
        s.names = j.at("names").get<std::vector<std::string>>();
        for (const auto& p : j.at("flip_pairs"))
            s.flip_pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
        s.head_pair = {j.at("head_pair").at(0).get<int>(),
                       j.at("head_pair").at(1).get<int>()};
        for (const auto& p : j.at("edges"))
            s.edges.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
    } catch (const json::exception& e) {
        fail(path, std::string("bad skeleton: ") + e.what());
    }
    try {
        s.validate();
    } catch (const InvariantError& e) {
        fail(path, e.what());
    }
    return s;
}

ordered_json skeleton_to_json(const Skeleton& s) {
    ordered_json j;
    j["k"] = s.k;
    j["names"] = s.names;
    auto pairs = ordered_json::array();
    for (const auto& [a, b] : s.flip_pairs) pairs.push_back({a, b});
    j["flip_pairs"] = pairs;
    j["head_pair"] = {s.head_pair.first, s.head_pair.second};
    auto edges = ordered_json::array();
    for (const auto& [a, b] : s.edges) edges.push_back({a, b});
    j["edges"] = edges;
    return j;
}

Pose pose_from_json(const std::string& path, const json& j, std::size_t k) {
    Pose pose;
    try {
        for (const auto& pj : j.at("parts")) {
            PartLabel p;
            p.x = pj.at("x").get<double>();
            p.y = pj.at("y").get<double>();
            p.z = pj.at("z").get<double>();
            p.visible = pj.at("visible").get<bool>();
            p.labeled = pj.at("labeled").get<bool>();
            pose.parts.push_back(p);
        }
    } catch (const json::exception& e) {
        fail(path, std::string("bad pose: ") + e.what());
    }
    if (pose.parts.size() != k)
        fail(path, "pose has " + std::to_string(pose.parts.size()) +
                       " parts, skeleton expects " + std::to_string(k));
    return pose;
}

ordered_json part_to_json(const PartLabel& p) {
    ordered_json j;
    j["x"] = p.x;
    j["y"] = p.y;
    j["z"] = p.z;
    j["visible"] = p.visible;
    j["labeled"] = p.labeled;
    return j;
}

void dump_json(const std::string& path, const ordered_json& j) {
    write_binary(path, j.dump(2) + "\n");
}

}  // namespace

DepthImage read_depth_pgm(const std::string& path) {
    const std::string bytes = read_binary(path);
    const PgmHeader h = parse_pgm_header(path, bytes);
    if (h.maxval != 65535)
        fail(path, "expected maxval 65535, got " + std::to_string(h.maxval));
    const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
    if (bytes.size() - h.data_offset < 2 * n)
        fail(path, "payload truncated: need " + std::to_string(2 * n) +
                       " bytes at offset " + std::to_string(h.data_offset));
    DepthImage img(h.width, h.height);
    const auto* d = reinterpret_cast<const unsigned char*>(bytes.data()) +
                    h.data_offset;
    for (std::size_t i = 0; i < n; ++i)
        img.data[i] = static_cast<double>((d[2 * i] << 8) | d[2 * i + 1]);
    return img;
}

void write_depth_pgm(const std::string& path, const DepthImage& img) {
    std::string out = "P5\n" + std::to_string(img.width) + " " +
                      std::to_string(img.height) + "\n65535\n";
    out.reserve(out.size() + img.data.size() * 2);
    for (double v : img.data) {
        const long mm = std::lround(std::clamp(v, 0.0, 65535.0));
        append_u16be(out, static_cast<unsigned>(mm));
    }
    write_binary(path, out);
}

MaskImage read_mask_pgm(const std::string& path) {
    const std::string bytes = read_binary(path);
    const PgmHeader h = parse_pgm_header(path, bytes);
    if (h.maxval != 255)
        fail(path, "expected maxval 255, got " + std::to_string(h.maxval));
    const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
    if (bytes.size() - h.data_offset < n)
        fail(path, "payload truncated at offset " +
                       std::to_string(h.data_offset));
    MaskImage mask(h.width, h.height);
    const auto* d = reinterpret_cast<const unsigned char*>(bytes.data()) +
                    h.data_offset;
    for (std::size_t i = 0; i < n; ++i) mask.data[i] = d[i] ? 1 : 0;
    return mask;
}

void write_mask_pgm(const std::string& path, const MaskImage& mask) {
    std::string out = "P5\n" + std::to_string(mask.width) + " " +
                      std::to_string(mask.height) + "\n255\n";
    for (std::uint8_t v : mask.data)
        out.push_back(static_cast<char>(v ? 255 : 0));
    write_binary(path, out);
}

const Tensor* TensorFile::find(const std::string& name) const {
    for (const auto& [n, t] : entries)
        if (n == name) return &t;
    return nullptr;
}

const Tensor& TensorFile::require(const std::string& name) const {
    const Tensor* t = find(name);
    if (!t) throw DataError("tensor file: missing entry '" + name + "'");
    return *t;
}

void write_tensor_file(const std::string& path, const TensorFile& file) {
    std::string out = "PTSR";
    append_u16le(out, 1);  // version
    if (file.entries.size() > 0xffff)
        fail(path, "too many tensor entries");
    append_u16le(out, static_cast<std::uint16_t>(file.entries.size()));
    for (const auto& [name, t] : file.entries) {
        if (name.empty() || name.size() > 255) fail(path, "bad entry name");
        out.push_back(static_cast<char>(name.size()));
        out += name;
        out.push_back(static_cast<char>(t.rank()));
        for (std::size_t d : t.dims())
            append_u32le(out, static_cast<std::uint32_t>(d));
        for (std::size_t i = 0; i < t.size(); ++i)
            append_f32le(out, static_cast<float>(t[i]));
    }
    write_binary(path, out);
}

TensorFile read_tensor_file(const std::string& path) {
    const std::string bytes = read_binary(path);
    Cursor c{path, bytes, 0};
    if (c.str(4) != "PTSR") fail(path, "not a PTSR file (bad magic)");
    const std::uint16_t version = c.u16le();
    if (version != 1)
        fail(path, "unsupported version " + std::to_string(version));
    const std::uint16_t count = c.u16le();
    TensorFile file;
    for (std::uint16_t e = 0; e < count; ++e) {
        const std::uint8_t name_len = c.u8();
        const std::string name = c.str(name_len);
        const std::uint8_t rank = c.u8();
        if (rank < 1 || rank > 4)
            fail(path, "entry '" + name + "': unsupported rank " +
                           std::to_string(rank));
        std::vector<std::size_t> dims(rank);
        std::size_t n = 1;
        for (auto& d : dims) {
            d = c.u32le();
            n *= d;
        }
        if (n > (1u << 28))
            fail(path, "entry '" + name + "': unreasonable size");
        Tensor t(dims);
        for (std::size_t i = 0; i < n; ++i) t[i] = c.f32le();
        file.entries.emplace_back(name, std::move(t));
    }
    return file;
}

TensorFile encoded_maps_to_file(const EncodedMaps& maps, int image_w,
                                int image_h) {
    TensorFile f;
    Tensor size({2});
    size[0] = image_w;
    size[1] = image_h;
    f.entries.emplace_back("image_size", std::move(size));
    Tensor anchors({maps.global.anchors.size(), 2});
    for (std::size_t a = 0; a < maps.global.anchors.size(); ++a) {
        anchors(a, 0) = maps.global.anchors[a].first;
        anchors(a, 1) = maps.global.anchors[a].second;
    }
    f.entries.emplace_back("anchors", std::move(anchors));
    f.entries.emplace_back("H", maps.parts.H);
    f.entries.emplace_back("D", maps.parts.D);
    f.entries.emplace_back("X", maps.parts.X);
    f.entries.emplace_back("Y", maps.parts.Y);
    f.entries.emplace_back("Wd", maps.parts.Wd);
    f.entries.emplace_back("Wt", maps.parts.Wt);
    f.entries.emplace_back("P", maps.global.P);
    f.entries.emplace_back("Wp", maps.global.Wp);
    return f;
}

EncodedMaps encoded_maps_from_file(const TensorFile& file) {
    EncodedMaps maps;
    const Tensor& size = file.require("image_size");
    if (size.size() != 2) throw DataError("tensor file: bad image_size entry");
    const int w = static_cast<int>(size[0]);
    const int h = static_cast<int>(size[1]);
    maps.parts.grid = GridSpec::for_image(w, h, kPartMapStride);
    maps.parts.H = file.require("H");
    maps.parts.D = file.require("D");
    maps.parts.X = file.require("X");
    maps.parts.Y = file.require("Y");
    maps.parts.Wd = file.require("Wd");
    maps.parts.Wt = file.require("Wt");
    maps.global.grid = GridSpec::for_image(w, h, kGlobalMapStride);
    maps.global.P = file.require("P");
    maps.global.Wp = file.require("Wp");
    const Tensor& anchors = file.require("anchors");
    if (anchors.rank() != 2 || anchors.dims()[1] != 2)
        throw DataError("tensor file: bad anchors entry");
    for (std::size_t a = 0; a < anchors.dims()[0]; ++a)
        maps.global.anchors.emplace_back(anchors(a, 0), anchors(a, 1));
    if (maps.parts.H.rank() != 3 || maps.parts.D.rank() != 3 ||
        maps.global.P.rank() != 4)
        throw DataError("tensor file: map ranks are wrong");
    maps.global.k = maps.parts.D.dims()[0];
    const std::size_t ch = maps.global.P.dims()[1];
    if (ch != maps.global.channels())
        throw DataError("tensor file: P channels inconsistent with K");

    const std::size_t gh8 = maps.parts.grid.gh, gw8 = maps.parts.grid.gw;
    const std::vector<std::size_t> part_dims{maps.global.k, gh8, gw8};
    for (const auto* t : {&maps.parts.D, &maps.parts.X, &maps.parts.Y,
                          &maps.parts.Wd, &maps.parts.Wt})
        if (t->dims() != part_dims)
            throw DataError("tensor file: part map shape mismatch");
    if (maps.parts.H.dims() !=
        std::vector<std::size_t>{maps.global.k + 1, gh8, gw8})
        throw DataError("tensor file: H shape mismatch");
    const std::vector<std::size_t> p_dims{
        maps.global.anchors.size(), ch,
        static_cast<std::size_t>(maps.global.grid.gh),
        static_cast<std::size_t>(maps.global.grid.gw)};
    if (maps.global.P.dims() != p_dims || !maps.global.Wp.same_shape(maps.global.P))
        throw DataError("tensor file: global map shape mismatch");
    return maps;
}

PoseFile load_pose_file(const std::string& path) {
    const json j = parse_json_file(path);
    PoseFile f;
    if (!j.contains("skeleton")) fail(path, "missing 'skeleton'");
    f.skeleton = skeleton_from_json(path, j["skeleton"]);
    for (const auto& pj : j.value("poses", json::array()))
        f.poses.push_back(pose_from_json(path, pj, f.skeleton.k));
    return f;
}

void save_pose_file(const std::string& path, const Skeleton& skeleton,
                    std::span<const Pose> poses) {
    ordered_json j;
    j["skeleton"] = skeleton_to_json(skeleton);
    auto arr = ordered_json::array();
    for (const Pose& pose : poses) {
        ordered_json pj;
        auto parts = ordered_json::array();
        for (const PartLabel& p : pose.parts) parts.push_back(part_to_json(p));
        pj["parts"] = parts;
        arr.push_back(pj);
    }
    j["poses"] = arr;
    dump_json(path, j);
}

DetectionFile load_detections(const std::string& path) {
    const json j = parse_json_file(path);
    DetectionFile f;
    if (!j.contains("skeleton")) fail(path, "missing 'skeleton'");
    f.skeleton = skeleton_from_json(path, j["skeleton"]);
    for (const auto& pj : j.value("poses", json::array())) {
        Detection d;
        d.pose = pose_from_json(path, pj, f.skeleton.k);
        d.score = pj.value("score", 1.0);
        if (pj.contains("bbox")) {
            const auto& b = pj["bbox"];
            if (!b.is_array() || b.size() != 4) fail(path, "bad bbox");
            d.bbox = BBox{b[0].get<double>(), b[1].get<double>(),
                          b[2].get<double>(), b[3].get<double>()};
        } else if (d.pose.has_labeled_part()) {
            d.bbox = bbox_from_pose(d.pose);
        }
        f.detections.push_back(std::move(d));
    }
    return f;
}

void save_detections(const std::string& path, const Skeleton& skeleton,
                     std::span<const FusedDetection> dets) {
    ordered_json j;
    j["skeleton"] = skeleton_to_json(skeleton);
    auto arr = ordered_json::array();
    for (const FusedDetection& fd : dets) {
        ordered_json pj;
        pj["score"] = fd.det.score;
        pj["bbox"] = {fd.det.bbox.x_min, fd.det.bbox.y_min, fd.det.bbox.x_max,
                      fd.det.bbox.y_max};
        auto parts = ordered_json::array();
        for (std::size_t i = 0; i < fd.det.pose.parts.size(); ++i) {
            ordered_json part = part_to_json(fd.det.pose.parts[i]);
            part["mode"] =
                std::string(1, static_cast<char>(fd.modes[i]));
            parts.push_back(part);
        }
        pj["parts"] = parts;
        arr.push_back(pj);
    }
    j["poses"] = arr;
    dump_json(path, j);
}

}  // namespace popparts
