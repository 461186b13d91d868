#pragma once

// Per-joint occlusion detectors: a HOG SVM and an RGB SVM over a square
// window around the joint. Either score below zero flags the joint as occluded.

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "vidpose/core/annotation.hpp"
#include "vidpose/core/config.hpp"
#include "vidpose/imageproc/hog.hpp"
#include "vidpose/imageproc/patch.hpp"
#include "vidpose/imageproc/rgb.hpp"
#include "vidpose/learners/svm.hpp"
#include "vidpose/util/parallel.hpp"
#include "vidpose/util/rng.hpp"

namespace vidpose {

inline constexpr std::array<JointId, 5> kOcclusionJoints = {JointId::Head, JointId::LShoulder, JointId::RShoulder,
                                                            JointId::LElbow, JointId::RElbow};
inline constexpr int kOcclusionRgbSide = 8;
inline constexpr int kOcclusionNegativesPerPositive = 3;
inline constexpr std::size_t kMaxOcclusionPositives = 300;

struct OcclusionJointModel {
    bool trained = false;
    std::string skipped;
    LinearSvm hog_svm;
    LinearSvm rgb_svm;
    std::size_t positives = 0;
};

struct OcclusionDetector {
    int window = 33;
    std::array<OcclusionJointModel, kJointCount> joints;

    static bool covers(JointId j) {
        for (JointId k : kOcclusionJoints)
            if (k == j) return true;
        return false;
    }
    const OcclusionJointModel& at(JointId j) const { return joints[index_of(j)]; }
};

enum class Visibility : std::uint8_t { Visible, Occluded };

struct WindowFeatures {
    std::vector<float> hog;
    std::vector<float> rgb;
};

inline WindowFeatures window_features(const RgbImage& frame, Point2 pos, int window) {
    const Patch p = extract_patch(frame, pos, window);
    return {hog(p).values, rgb_vector(p, kOcclusionRgbSide)};
}

/// Layout test for training positives: no other joint within half a window, and
/// for an elbow, the wrist of the same arm outside the window.
inline bool layout_unoccluded(const AnnotationSet& annos, const Annotation& a, int window) {
    const double half = 0.5 * window;
    for (JointId other : kAllJoints) {
        if (other == a.joint) continue;
        for (auto id : annos.active_at(a.frame, other)) {
            const Point2 q = annos[id].pos;
            if (distance(q, a.pos) < half) return false;
            const bool own_wrist = (a.joint == JointId::LElbow && other == JointId::LWrist) ||
                                   (a.joint == JointId::RElbow && other == JointId::RWrist);
            if (own_wrist && std::abs(q.x - a.pos.x) <= half && std::abs(q.y - a.pos.y) <= half) return false;
        }
    }
    return true;
}

inline OcclusionDetector train_occlusion_detector(const AnnotationSet& annos, const FrameStore& frames,
                                                  const PipelineConfig& cfg, std::uint64_t seed) {
    OcclusionDetector d;
    d.window = cfg.occlusion_window;
    const FrameSize size = frames.frame_size();
    for (JointId j : kOcclusionJoints) {
        OcclusionJointModel& m = d.joints[index_of(j)];
        std::vector<const Annotation*> pos;
        for (const auto& a : annos.all())
            if (a.active() && a.joint == j && is_trusted(a.provenance.origin) && layout_unoccluded(annos, a, d.window))
                pos.push_back(&a);
        if (pos.size() > kMaxOcclusionPositives) {
            std::vector<const Annotation*> sub;
            for (std::size_t i = 0; i < kMaxOcclusionPositives; ++i) sub.push_back(pos[i * pos.size() / kMaxOcclusionPositives]);
            pos.swap(sub);
        }
        if (pos.size() < 2) {
            m.skipped = "too few un-occluded annotations (" + std::to_string(pos.size()) + ")";
            continue;
        }
        struct Job {
            int frame;
            Point2 p;
            bool positive;
        };
        std::vector<Job> jobs;
        const std::uint64_t js = derive_seed(seed, {index_of(j)});
        for (std::size_t i = 0; i < pos.size(); ++i) {
            jobs.push_back({pos[i]->frame, pos[i]->pos, true});
            Rng rng(derive_seed(js, {i}));
            std::uniform_real_distribution<double> r(0.5 * d.window, 2.0 * d.window), a(0.0, 2 * std::numbers::pi);
            for (int k = 0; k < kOcclusionNegativesPerPositive; ++k) {
                const double rr = r(rng), aa = a(rng);
                jobs.push_back({pos[i]->frame, size.clamp(pos[i]->pos + Point2{rr * std::cos(aa), rr * std::sin(aa)}), false});
            }
        }
        std::vector<WindowFeatures> feats(jobs.size());
        parallel_for(jobs.size(), [&](std::size_t i) { feats[i] = window_features(frames[jobs[i].frame], jobs[i].p, d.window); });
        std::vector<std::vector<float>> hp, hn, rp, rn;
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            (jobs[i].positive ? hp : hn).push_back(std::move(feats[i].hog));
            (jobs[i].positive ? rp : rn).push_back(std::move(feats[i].rgb));
        }
        SvmParams sp;
        sp.positive_weight = double(hn.size()) / double(hp.size());
        sp.seed = derive_seed(js, {~0ull});
        sp.space = FeatureSpace::Hog;
        m.hog_svm = train_svm(hp, hn, sp);
        sp.space = FeatureSpace::Rgb;
        m.rgb_svm = train_svm(rp, rn, sp);
        m.positives = hp.size();
        m.trained = true;
    }
    return d;
}

/// Untrained or uncovered joints are reported Visible.
inline Visibility detect_occlusion(const OcclusionDetector& d, const RgbImage& frame, JointId joint, Point2 pos) {
    if (!frame.size().contains(pos)) throw std::invalid_argument("detect_occlusion: position outside the frame");
    if (!OcclusionDetector::covers(joint) || !d.at(joint).trained) return Visibility::Visible;
    const auto& m = d.at(joint);
    const auto f = window_features(frame, pos, d.window);
    return std::min(m.hog_svm.score(f.hog), m.rgb_svm.score(f.rgb)) < 0 ? Visibility::Occluded : Visibility::Visible;
}

}  // namespace vidpose
