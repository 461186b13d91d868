#pragma once

// Line-delimited JSON for annotations, ground truth and predictions.
//
// Annotation lines carry: frame, joint, x, y, confidence, origin,
// source_frame, status and hop_count. Ground-truth lines add `occluded`.
// Prediction lines carry frame, joint, x, y, confidence only.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vidpose/core/annotation.hpp"
#include "vidpose/core/errors.hpp"
#include "vidpose/core/image.hpp"

namespace vidpose {

/// One predicted joint location.
struct JointPrediction {
    int frame = 0;
    JointId joint = JointId::Head;
    Point2 pos;
    double confidence = 0.0;
};

namespace detail {

// Shortest round-tripping decimal representation keeps files byte-stable and lossless.
inline std::string format_double(double v) {
    char buf[64];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& file,
                                     std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(file, line, std::string("missing key '") + key + "'");
    return *it;
}

inline int require_int(const nlohmann::json& obj, const char* key, const std::string& file, std::size_t line) {
    const auto& v = require(obj, key, file, line);
    if (!v.is_number_integer()) throw ParseError(file, line, std::string("'") + key + "' must be an integer");
    return v.get<int>();
}

inline double require_number(const nlohmann::json& obj, const char* key, const std::string& file,
                             std::size_t line) {
    const auto& v = require(obj, key, file, line);
    if (!v.is_number()) throw ParseError(file, line, std::string("'") + key + "' must be a number");
    return v.get<double>();
}

inline JointId require_joint(const nlohmann::json& obj, const std::string& file, std::size_t line) {
    const auto& v = require(obj, "joint", file, line);
    if (!v.is_string()) throw ParseError(file, line, "'joint' must be a string");
    auto j = parse_joint(v.get<std::string>());
    if (!j) throw ParseError(file, line, "unknown joint '" + v.get<std::string>() + "'");
    return *j;
}

template <typename Fn>
void for_each_json_line(std::istream& in, const std::string& file, Fn&& fn) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(file, lineno, std::string("invalid JSON: ") + e.what());
        }
        if (!obj.is_object()) throw ParseError(file, lineno, "expected a JSON object");
        fn(obj, lineno);
    }
}

inline void write_common(std::ostream& out, int frame, JointId joint, Point2 pos, double conf) {
    out << "{\"frame\":" << frame << ",\"joint\":\"" << joint_name(joint) << "\",\"x\":" << format_double(pos.x)
        << ",\"y\":" << format_double(pos.y) << ",\"confidence\":" << format_double(conf);
}

}  // namespace detail

inline void write_annotation_line(std::ostream& out, const Annotation& a) {
    detail::write_common(out, a.frame, a.joint, a.pos, a.confidence);
    out << ",\"origin\":\"" << origin_name(a.provenance.origin) << "\",\"source_frame\":" << a.provenance.source_frame
        << ",\"hop_count\":" << a.provenance.hop_count << ",\"status\":\"" << status_name(a.status) << "\"}\n";
}

inline void write_annotations(std::ostream& out, const AnnotationSet& set, bool active_only = false) {
    for (const auto& a : set.all())
        if (!active_only || a.active()) write_annotation_line(out, a);
}

inline Annotation parse_annotation(const nlohmann::json& obj, const std::string& file, std::size_t line) {
    Annotation a;
    a.frame = detail::require_int(obj, "frame", file, line);
    a.joint = detail::require_joint(obj, file, line);
    a.pos = {detail::require_number(obj, "x", file, line), detail::require_number(obj, "y", file, line)};
    a.confidence = detail::require_number(obj, "confidence", file, line);
    const auto& o = detail::require(obj, "origin", file, line);
    auto origin = o.is_string() ? parse_origin(o.get<std::string>()) : std::nullopt;
    if (!origin) throw ParseError(file, line, "unknown origin");
    a.provenance.origin = *origin;
    a.provenance.source_frame = detail::require_int(obj, "source_frame", file, line);
    // hop_count is optional for hand-written files: Initial -> 0, otherwise 1.
    if (obj.contains("hop_count"))
        a.provenance.hop_count = detail::require_int(obj, "hop_count", file, line);
    else
        a.provenance.hop_count = *origin == Origin::Initial ? 0 : 1;
    const auto& s = detail::require(obj, "status", file, line);
    auto status = s.is_string() ? parse_status(s.get<std::string>()) : std::nullopt;
    if (!status) throw ParseError(file, line, "unknown status");
    a.status = *status;
    if (a.frame < 0) throw ParseError(file, line, "negative frame index");
    if (!a.pos.finite()) throw ParseError(file, line, "non-finite position");
    if (!a.provenance.valid()) throw ParseError(file, line, "hop_count must be 0 iff origin is Initial");
    return a;
}

inline AnnotationSet read_annotations(std::istream& in, const std::string& file = "<stream>") {
    AnnotationSet set;
    detail::for_each_json_line(in, file, [&](const nlohmann::json& obj, std::size_t line) {
        set.insert(parse_annotation(obj, file, line));
    });
    return set;
}

inline AnnotationSet load_annotations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return read_annotations(in, path);
}

inline void save_annotations(const std::string& path, const AnnotationSet& set, bool active_only = false) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write_annotations(out, set, active_only);
    if (!out) throw IoError("write failed: " + path);
}

/// Ground truth lines reuse the annotation schema (origin Initial, status Active) plus `occluded`.
inline void write_ground_truth(std::ostream& out, const GroundTruth& gt) {
    for (int f = 0; f < gt.n_frames; ++f)
        for (JointId j : kAllJoints) {
            const auto& e = gt.at(f, j);
            if (!e.pos) continue;
            detail::write_common(out, f, j, *e.pos, 1.0);
            out << ",\"origin\":\"Initial\",\"source_frame\":" << f << ",\"hop_count\":0,\"status\":\"Active\",\"occluded\":"
                << (e.occluded ? "true" : "false") << "}\n";
        }
}

/// Reads ground truth. Only frame, joint, x, y are required; `occluded` defaults to false.
/// The frame count is max frame + 1 unless `n_frames` is given; size is taken from `size`.
inline GroundTruth read_ground_truth(std::istream& in, const std::string& file = "<stream>", int n_frames = -1,
                                     FrameSize size = {}) {
    struct Row {
        int frame;
        JointId joint;
        Point2 pos;
        bool occluded;
    };
    std::vector<Row> rows;
    int max_frame = -1;
    detail::for_each_json_line(in, file, [&](const nlohmann::json& obj, std::size_t line) {
        Row r{detail::require_int(obj, "frame", file, line), detail::require_joint(obj, file, line),
              {detail::require_number(obj, "x", file, line), detail::require_number(obj, "y", file, line)}, false};
        if (r.frame < 0) throw ParseError(file, line, "negative frame index");
        if (obj.contains("occluded")) {
            if (!obj["occluded"].is_boolean()) throw ParseError(file, line, "'occluded' must be a boolean");
            r.occluded = obj["occluded"].get<bool>();
        }
        max_frame = std::max(max_frame, r.frame);
        rows.push_back(r);
    });
    GroundTruth gt(n_frames >= 0 ? n_frames : max_frame + 1, size);
    for (const auto& r : rows) {
        if (r.frame >= gt.n_frames) continue;
        gt.at(r.frame, r.joint) = {r.pos, r.occluded};
    }
    return gt;
}

inline GroundTruth load_ground_truth(const std::string& path, int n_frames = -1, FrameSize size = {}) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return read_ground_truth(in, path, n_frames, size);
}

inline void save_ground_truth(const std::string& path, const GroundTruth& gt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write_ground_truth(out, gt);
    if (!out) throw IoError("write failed: " + path);
}

inline void write_predictions(std::ostream& out, const std::vector<JointPrediction>& preds) {
    for (const auto& p : preds) {
        detail::write_common(out, p.frame, p.joint, p.pos, p.confidence);
        out << "}\n";
    }
}

inline std::vector<JointPrediction> read_predictions(std::istream& in, const std::string& file = "<stream>") {
    std::vector<JointPrediction> out;
    detail::for_each_json_line(in, file, [&](const nlohmann::json& obj, std::size_t line) {
        JointPrediction p;
        p.frame = detail::require_int(obj, "frame", file, line);
        p.joint = detail::require_joint(obj, file, line);
        p.pos = {detail::require_number(obj, "x", file, line), detail::require_number(obj, "y", file, line)};
        p.confidence = obj.contains("confidence") && obj["confidence"].is_number() ? obj["confidence"].get<double>() : 1.0;
        out.push_back(p);
    });
    return out;
}

inline std::vector<JointPrediction> load_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return read_predictions(in, path);
}

inline void save_predictions(const std::string& path, const std::vector<JointPrediction>& preds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write_predictions(out, preds);
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace vidpose
