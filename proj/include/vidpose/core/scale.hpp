#pragma once

// Person-scale normalization: frames are resized so the median shoulder
// distance of the initial annotations lands near the target width.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "vidpose/core/annotation.hpp"
#include "vidpose/core/annotation_io.hpp"
#include "vidpose/core/image.hpp"

namespace vidpose {

inline constexpr double kTargetShoulderWidth = 100.0;  // px
inline constexpr double kScaleDeadband = 0.1;          // factors within 1 +/- this are snapped to 1

/// Median LShoulder-RShoulder distance over frames holding both as Active annotations.
inline std::optional<double> median_shoulder_distance(const AnnotationSet& set) {
    std::vector<double> d;
    for (const auto& [f, j] : set.keys()) {
        if (j != JointId::LShoulder) continue;
        const auto l = set.active_at(f, JointId::LShoulder);
        const auto r = set.active_at(f, JointId::RShoulder);
        if (l.empty() || r.empty()) continue;
        const double dist = distance(set[l.front()].pos, set[r.front()].pos);
        if (dist > 0) d.push_back(dist);
    }
    if (d.empty()) return std::nullopt;
    std::sort(d.begin(), d.end());
    const std::size_t n = d.size();
    return n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
}

/// Factor to apply at ingest. `fallback` is used when no frame has both shoulders.
inline double choose_scale_factor(const AnnotationSet& initial, double fallback = 1.0) {
    if (!(fallback > 0)) throw std::invalid_argument("choose_scale_factor: fallback must be > 0");
    const auto m = median_shoulder_distance(initial);
    const double f = m ? kTargetShoulderWidth / *m : fallback;
    return std::abs(f - 1.0) <= kScaleDeadband ? 1.0 : f;
}

inline RgbImage resize_bilinear(const RgbImage& img, int width, int height) {
    if (width < 1 || height < 1) throw std::invalid_argument("resize_bilinear: empty target");
    RgbImage out(width, height, img.channels);
    const double sx = double(img.width) / width, sy = double(img.height) / height;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                const double v = sample_bilinear(img, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5, c);
                out.at(x, y, c) = std::uint8_t(std::clamp(std::lround(v), 0L, 255L));
            }
    return out;
}

/// Rescales every frame, the annotations and (optionally) ground truth in place.
inline void apply_scale(double factor, FrameStore& frames, AnnotationSet* annos = nullptr, GroundTruth* gt = nullptr) {
    if (!(factor > 0)) throw std::invalid_argument("apply_scale: factor must be > 0");
    if (factor == 1.0) return;
    const int w = std::max(1, int(std::lround(frames.width() * factor)));
    const int h = std::max(1, int(std::lround(frames.height() * factor)));
    for (auto& f : frames.frames) f = resize_bilinear(f, w, h);
    frames.scale_factor *= factor;
    const FrameSize size{w, h};
    if (annos) {
        AnnotationSet scaled;
        for (auto a : annos->all()) {
            a.pos = size.clamp(a.pos * factor);
            scaled.insert(a);
        }
        *annos = std::move(scaled);
    }
    if (gt) {
        gt->size = size;
        for (auto& row : gt->entries)
            for (auto& e : row)
                if (e.pos) e.pos = size.clamp(*e.pos * factor);
    }
}

/// Maps positions back to the original frame coordinates.
inline void unscale(double factor, std::vector<JointPrediction>& preds) {
    for (auto& p : preds) p.pos = p.pos * (1.0 / factor);
}
inline AnnotationSet unscale(double factor, const AnnotationSet& set) {
    AnnotationSet out;
    for (auto a : set.all()) {
        a.pos = a.pos * (1.0 / factor);
        out.insert(a);
    }
    return out;
}

}  // namespace vidpose
