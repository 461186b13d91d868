#pragma once

// Personalized detector: a multi-class forest trained on the trusted
// annotations of one video, applied densely to every frame.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "vidpose/core/annotation.hpp"
#include "vidpose/core/annotation_io.hpp"
#include "vidpose/core/config.hpp"
#include "vidpose/learners/forest.hpp"
#include "vidpose/learners/model_io.hpp"
#include "vidpose/spatial/spatial.hpp"
#include "vidpose/util/parallel.hpp"
#include "vidpose/util/rng.hpp"

namespace vidpose {

inline constexpr int kPositiveJitters = 2;         // extra jittered copies per positive
inline constexpr double kPositiveJitter = 2.0;     // px
inline constexpr double kBackgroundMinDistance = 10.0;
inline constexpr double kNearBackgroundMax = 30.0;

struct PersonalizedDetector {
    RandomForest forest;
    int stride = 4;
    std::array<bool, kJointCount> trainable{};
    std::array<std::size_t, kJointCount> training_frames{};

    bool trained_for(JointId j) const { return trainable[index_of(j)]; }
};

namespace detail {
inline std::vector<std::size_t> even_subsample(std::size_t n, std::size_t cap) {
    std::vector<std::size_t> idx;
    const std::size_t m = std::min(n, cap);
    for (std::size_t i = 0; i < m; ++i) idx.push_back(i * n / m);
    return idx;
}
}  // namespace detail

/// Trains on the trusted Active annotations (Initial, Consensus, Corrected) of each joint.
inline PersonalizedDetector personalize(const AnnotationSet& annos, const FrameStore& frames, const PipelineConfig& cfg,
                                        std::uint64_t seed) {
    PersonalizedDetector det;
    det.stride = cfg.detector_stride;
    const MultiWindowLayout layout;
    const FrameSize size = frames.frame_size();

    struct Item {
        int frame;
        Point2 p;
        int label;
    };
    std::vector<Item> items;
    std::vector<char> frame_used(std::size_t(std::max(0, frames.size())), 0);
    for (JointId j : kAllJoints) {
        std::vector<const Annotation*> src;
        for (const auto& a : annos.all())
            if (a.active() && a.joint == j && is_trusted(a.provenance.origin) && a.frame >= 0 && a.frame < frames.size())
                src.push_back(&a);
        std::stable_sort(src.begin(), src.end(), [](auto* a, auto* b) { return a->frame < b->frame; });
        const auto pick = detail::even_subsample(src.size(), std::size_t(cfg.forest_max_frames_per_joint));
        det.trainable[index_of(j)] = !pick.empty();
        det.training_frames[index_of(j)] = pick.size();
        for (std::size_t i : pick) {
            const Annotation& a = *src[i];
            frame_used[std::size_t(a.frame)] = 1;
            items.push_back({a.frame, a.pos, int(index_of(j))});
            Rng rng(derive_seed(seed, {1, index_of(j), i}));
            std::uniform_real_distribution<double> u(-kPositiveJitter, kPositiveJitter);
            for (int k = 0; k < kPositiveJitters; ++k) items.push_back({a.frame, size.clamp(a.pos + Point2{u(rng), u(rng)}), int(index_of(j))});
        }
    }
    if (std::none_of(det.trainable.begin(), det.trainable.end(), [](bool b) { return b; }))
        throw PipelineError("personalize: no joint has a trusted annotation to train on");

    std::vector<int> bg_frames;
    for (int f = 0; f < frames.size(); ++f)
        if (frame_used[std::size_t(f)]) bg_frames.push_back(f);
    const auto bg_pick = detail::even_subsample(bg_frames.size(), std::size_t(cfg.forest_max_frames_per_joint));
    for (std::size_t bi : bg_pick) {
        const int f = bg_frames[bi];
        std::vector<Point2> known;
        for (JointId j : kAllJoints)
            for (auto id : annos.active_at(f, j)) known.push_back(annos[id].pos);
        auto clear = [&](Point2 p) {
            for (const auto& q : known)
                if (distance(p, q) < kBackgroundMinDistance) return false;
            return true;
        };
        Rng rng(derive_seed(seed, {2, std::uint64_t(f)}));
        std::uniform_real_distribution<double> ux(0.0, size.width - 1.0), uy(0.0, size.height - 1.0);
        std::uniform_real_distribution<double> ur(kBackgroundMinDistance, kNearBackgroundMax), ua(0.0, 2 * std::numbers::pi);
        const int n_near = known.empty() ? 0 : cfg.forest_background_per_frame * 2 / 5;
        int placed = 0;
        for (int tries = 0; placed < cfg.forest_background_per_frame && tries < 20 * cfg.forest_background_per_frame; ++tries) {
            Point2 p;
            if (placed < n_near) {
                const Point2 c = known[std::uniform_int_distribution<std::size_t>(0, known.size() - 1)(rng)];
                const double r = ur(rng), a = ua(rng);
                p = size.clamp(c + Point2{r * std::cos(a), r * std::sin(a)});
            } else {
                p = {ux(rng), uy(rng)};
            }
            if (!clear(p)) continue;
            items.push_back({f, p, kBackgroundClass});
            ++placed;
        }
    }

    // Features, grouped by frame so each integral image is built once.
    std::vector<std::vector<std::size_t>> by_frame(std::size_t(std::max(0, frames.size())));
    for (std::size_t i = 0; i < items.size(); ++i) by_frame[std::size_t(items[i].frame)].push_back(i);
    std::vector<ForestSample> samples(items.size());
    parallel_for(by_frame.size(), [&](std::size_t f) {
        if (by_frame[f].empty()) return;
        const IntegralRgb integral(frames[int(f)], layout.max_half() + 2);
        for (std::size_t i : by_frame[f]) {
            const Point2 p = items[i].p;
            samples[i] = {integral.features(layout, int(std::lround(p.x)), int(std::lround(p.y))), items[i].label};
        }
    });
    det.forest = train_forest(samples, cfg.forest, derive_seed(seed, {3}), layout);
    return det;
}

/// Everything the pipeline reads from one dense pass of the detector over a frame.
struct FrameScan {
    std::array<JointPrediction, kJointCount> prediction{};
    std::array<std::vector<Candidate>, kJointCount> candidates;
};

/// Argmax on the stride grid, refined at single-pixel steps within one stride.
inline JointPrediction refine_peak(const PersonalizedDetector& det, const IntegralRgb& integral, const ConfidenceMap& m,
                                   int frame, JointId joint) {
    JointPrediction p{frame, joint, {0, 0}, -1.0};
    int bi = 0, bj = 0;
    for (int j = 0; j < m.grid_h; ++j)
        for (int i = 0; i < m.grid_w; ++i)
            if (m.at(i, j) > p.confidence) {
                p.confidence = m.at(i, j);
                bi = i;
                bj = j;
            }
    p.pos = m.location(bi, bj);
    if (!det.trained_for(joint) || m.stride == 1) return p;
    const int cx = int(p.pos.x), cy = int(p.pos.y), r = m.stride - 1;
    for (int y = std::max(0, cy - r); y <= std::min(integral.height() - 1, cy + r); ++y)
        for (int x = std::max(0, cx - r); x <= std::min(integral.width() - 1, cx + r); ++x) {
            if (x % m.stride == 0 && y % m.stride == 0) continue;  // already on the grid
            const double v = forest_probability(det.forest, integral, joint, x, y);
            if (v > p.confidence) {
                p.confidence = v;
                p.pos = {double(x), double(y)};
            }
        }
    return p;
}

inline FrameScan scan_frame(const PersonalizedDetector& det, const RgbImage& frame, int frame_index, const PipelineConfig& cfg) {
    FrameScan s;
    const IntegralRgb integral(frame, det.forest.layout.max_half() + 2);
    const auto maps = forest_class_maps(det.forest, frame, det.stride, &integral);
    for (JointId j : kAllJoints) {
        const auto& m = maps[index_of(j)];
        s.prediction[index_of(j)] = refine_peak(det, integral, m, frame_index, j);
        if (det.trained_for(j))
            s.candidates[index_of(j)] = candidates_from_map(m, frame_index, cfg.conf_min, cfg.nms_radius, cfg.max_candidates_per_frame);
    }
    return s;
}

inline std::vector<FrameScan> scan_all(const PersonalizedDetector& det, const FrameStore& frames, const PipelineConfig& cfg) {
    std::vector<FrameScan> out(std::size_t(std::max(0, frames.size())));
    parallel_for(out.size(), [&](std::size_t f) { out[f] = scan_frame(det, frames[int(f)], int(f), cfg); });
    return out;
}

inline std::vector<JointPrediction> predictions_of(const std::vector<FrameScan>& scans) {
    std::vector<JointPrediction> out;
    out.reserve(scans.size() * kJointCount);
    for (const auto& s : scans)
        for (const auto& p : s.prediction) out.push_back(p);
    return out;
}

/// One prediction per frame and joint, ordered by frame then joint.
inline std::vector<JointPrediction> predict_all(const PersonalizedDetector& det, const FrameStore& frames) {
    std::vector<std::array<JointPrediction, kJointCount>> slots(std::size_t(std::max(0, frames.size())));
    parallel_for(slots.size(), [&](std::size_t f) {
        const IntegralRgb integral(frames[int(f)], det.forest.layout.max_half() + 2);
        const auto maps = forest_class_maps(det.forest, frames[int(f)], det.stride, &integral);
        for (JointId j : kAllJoints) slots[f][index_of(j)] = refine_peak(det, integral, maps[index_of(j)], int(f), j);
    });
    std::vector<JointPrediction> out;
    for (const auto& s : slots) out.insert(out.end(), s.begin(), s.end());
    return out;
}

struct AccuracyReport {
    std::array<std::optional<double>, kJointCount> per_joint;  // percent
    std::array<std::size_t, kJointCount> evaluated{};
    double average = 0.0;  // mean over joints with at least one evaluated entry
};

/// Percent of ground-truth entries with a prediction within d (inclusive).
inline AccuracyReport evaluate_accuracy(const std::vector<JointPrediction>& preds, const GroundTruth& gt, double d,
                                        bool exclude_occluded = true) {
    if (!(d > 0)) throw std::invalid_argument("evaluate_accuracy: d must be > 0");
    std::vector<std::array<std::optional<Point2>, kJointCount>> by_frame(std::size_t(std::max(0, gt.n_frames)));
    for (const auto& p : preds)
        if (p.frame >= 0 && p.frame < gt.n_frames && !by_frame[std::size_t(p.frame)][index_of(p.joint)])
            by_frame[std::size_t(p.frame)][index_of(p.joint)] = p.pos;
    AccuracyReport r;
    std::array<std::size_t, kJointCount> hits{};
    for (int f = 0; f < gt.n_frames; ++f)
        for (JointId j : kAllJoints) {
            if (!gt.has(f, j) || (exclude_occluded && gt.occluded(f, j))) continue;
            const auto& p = by_frame[std::size_t(f)][index_of(j)];
            if (!p) continue;
            ++r.evaluated[index_of(j)];
            if (distance(*p, *gt.at(f, j).pos) <= d) ++hits[index_of(j)];
        }
    double sum = 0;
    int n = 0;
    for (JointId j : kAllJoints) {
        const auto k = index_of(j);
        if (r.evaluated[k] == 0) continue;
        r.per_joint[k] = 100.0 * double(hits[k]) / double(r.evaluated[k]);
        sum += *r.per_joint[k];
        ++n;
    }
    if (n == 0) throw std::invalid_argument("evaluate_accuracy: predictions and ground truth share no frames");
    r.average = sum / n;
    return r;
}

/// Percent of Active annotations of `joint` within d of the ground truth.
inline std::optional<double> annotation_accuracy(const AnnotationSet& set, const GroundTruth& gt, JointId joint, double d,
                                                 bool exclude_occluded = true) {
    std::size_t n = 0, hit = 0;
    for (const auto& a : set.all()) {
        if (!a.active() || a.joint != joint || !gt.has(a.frame, joint)) continue;
        if (exclude_occluded && gt.occluded(a.frame, joint)) continue;
        ++n;
        hit += distance(a.pos, *gt.at(a.frame, joint).pos) <= d;
    }
    if (n == 0) return std::nullopt;
    return 100.0 * double(hit) / double(n);
}

inline void save_detector(const std::string& path, const PersonalizedDetector& det, double scale_factor = 1.0) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    BinaryWriter w(out);
    w.header(ModelKind::Detector);
    w.put(std::int32_t(det.stride));
    w.put(scale_factor);
    for (JointId j : kAllJoints) {
        w.put(std::uint8_t(det.trainable[index_of(j)]));
        w.put(std::uint64_t(det.training_frames[index_of(j)]));
    }
    write_forest_payload(w, det.forest);
    if (!out) throw IoError("write failed: " + path);
}

/// Returns the detector and the scale factor it was trained at.
inline std::pair<PersonalizedDetector, double> load_detector(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    BinaryReader r(in, path);
    r.header(ModelKind::Detector);
    PersonalizedDetector det;
    det.stride = r.get<std::int32_t>();
    if (det.stride < 1) r.fail("bad stride");
    const double scale = r.get<double>();
    if (!(scale > 0)) r.fail("bad scale factor");
    for (JointId j : kAllJoints) {
        det.trainable[index_of(j)] = r.get<std::uint8_t>() != 0;
        det.training_frames[index_of(j)] = std::size_t(r.get<std::uint64_t>());
    }
    det.forest = read_forest_payload(r);
    return {std::move(det), scale};
}

}  // namespace vidpose
