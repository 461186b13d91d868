#pragma once

// Lower-arm puppet: the elbow-wrist segment is cut out as an oriented
// rectangle, resampled to a canonical raster whose length axis is
// normalised to the nominal forearm length, and classified by a HOG SVM and
// an RGB SVM. Both must pass.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "vidpose/core/annotation.hpp"
#include "vidpose/core/config.hpp"
#include "vidpose/core/image.hpp"
#include "vidpose/imageproc/hog.hpp"
#include "vidpose/imageproc/rgb.hpp"
#include "vidpose/learners/svm.hpp"
#include "vidpose/util/parallel.hpp"
#include "vidpose/util/rng.hpp"

namespace vidpose {

inline constexpr int kPuppetRgbAlong = 8;
inline constexpr int kPuppetRgbAcross = 3;
inline constexpr double kPuppetOffsetMin = 15.0;
inline constexpr double kPuppetOffsetMax = 60.0;
inline constexpr int kPuppetOffsetNegatives = 4;

/// Corners of the width-w rectangle spanning elbow -> wrist, in order
/// elbow-side -n, wrist-side -n, wrist-side +n, elbow-side +n with n the left normal.
inline std::array<Point2, 4> limb_rectangle(Point2 elbow, Point2 wrist, double width) {
    const Point2 d = wrist - elbow;
    const double len = d.norm();
    if (len <= 0) throw std::invalid_argument("limb_rectangle: zero-length limb");
    const Point2 u = d * (1.0 / len);
    const Point2 n{-u.y, u.x};
    const Point2 h = n * (width / 2);
    return {elbow - h, wrist - h, wrist + h, elbow + h};
}

/// Raster length (samples along the limb) for a nominal length: a multiple of the HOG cell plus one.
inline int puppet_raster_length(double nominal_length) {
    return kHogCell * std::max(2, int(std::lround(nominal_length / kHogCell))) + 1;
}

/// Rectified crop, `raster_len` samples from elbow to wrist and width+1 samples across.
inline FloatImage rectify_limb(const RgbImage& frame, Point2 elbow, Point2 wrist, int width, int raster_len) {
    const Point2 d = wrist - elbow;
    const double len = d.norm();
    if (len <= 0) throw std::invalid_argument("rectify_limb: zero-length limb");
    const Point2 u = d * (1.0 / len);
    const Point2 n{-u.y, u.x};
    FloatImage out(raster_len, width + 1, 3);
    for (int j = 0; j <= width; ++j)
        for (int i = 0; i < raster_len; ++i) {
            const Point2 p = elbow + d * (double(i) / (raster_len - 1)) + n * (j - width / 2.0);
            for (int c = 0; c < 3; ++c) out.at(i, j, c) = float(sample_bilinear(frame, p.x, p.y, c) / 255.0);
        }
    return out;
}

struct PuppetArm {
    bool trained = false;
    std::string skipped;  // reason when untrained
    double nominal_length = 0.0;
    int raster_len = 0;
    LinearSvm hog_svm;
    LinearSvm rgb_svm;
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

struct PuppetModel {
    int width = 24;
    std::array<PuppetArm, 2> arms;

    const PuppetArm& arm(ArmSide s) const { return arms[s == ArmSide::Left ? 0 : 1]; }
    PuppetArm& arm(ArmSide s) { return arms[s == ArmSide::Left ? 0 : 1]; }
};

struct LimbFeatures {
    std::vector<float> hog;
    std::vector<float> rgb;
};

inline LimbFeatures limb_features(const RgbImage& frame, Point2 elbow, Point2 wrist, int width, int raster_len) {
    const FloatImage r = rectify_limb(frame, elbow, wrist, width, raster_len);
    return {hog(r).values, rgb_vector(r, kPuppetRgbAlong, kPuppetRgbAcross)};
}

struct LimbPair {
    int frame = 0;
    Point2 elbow, wrist;
};

/// Frames where both endpoints of a side carry a trusted Active annotation (first one in insert order).
inline std::vector<LimbPair> trusted_limb_pairs(const AnnotationSet& annos, ArmSide side) {
    auto first_trusted = [&](int f, JointId j) -> std::optional<Point2> {
        for (auto id : annos.ids_at(f, j))
            if (annos[id].active() && is_trusted(annos[id].provenance.origin)) return annos[id].pos;
        return std::nullopt;
    };
    std::vector<LimbPair> out;
    for (const auto& [f, j] : annos.keys()) {
        if (j != elbow_of(side)) continue;
        const auto e = first_trusted(f, j);
        const auto w = first_trusted(f, wrist_of(side));
        if (e && w && distance(*e, *w) > 0) out.push_back({f, *e, *w});
    }
    return out;
}

inline Point2 random_offset(Rng& rng) {
    const double r = std::uniform_real_distribution<double>(kPuppetOffsetMin, kPuppetOffsetMax)(rng);
    const double a = std::uniform_real_distribution<double>(0.0, 2 * std::numbers::pi)(rng);
    return {r * std::cos(a), r * std::sin(a)};
}

/// Trains both arms from trusted annotation pairs. An arm with too few pairs stays untrained.
inline PuppetModel train_puppet(const AnnotationSet& annos, const FrameStore& frames, const PipelineConfig& cfg,
                                std::uint64_t seed) {
    PuppetModel m;
    m.width = cfg.puppet_width;
    const FrameSize size = frames.frame_size();
    for (ArmSide side : {ArmSide::Left, ArmSide::Right}) {
        PuppetArm& arm = m.arm(side);
        const auto pairs = trusted_limb_pairs(annos, side);
        if (int(pairs.size()) < cfg.min_puppet_pairs) {
            arm.skipped = "too few elbow-wrist pairs (" + std::to_string(pairs.size()) + ")";
            continue;
        }
        std::vector<double> lens;
        for (const auto& p : pairs) lens.push_back(distance(p.elbow, p.wrist));
        std::nth_element(lens.begin(), lens.begin() + std::ptrdiff_t(lens.size() / 2), lens.end());
        arm.nominal_length = lens[lens.size() / 2];
        arm.raster_len = puppet_raster_length(arm.nominal_length);

        // Opposite-side wrists for the hand-swap negatives.
        const auto other = trusted_limb_pairs(annos, opposite(side));
        std::vector<std::optional<Point2>> swap(std::size_t(frames.size()));
        for (const auto& o : other) swap[std::size_t(o.frame)] = o.wrist;

        struct Job {
            int frame;
            Point2 e, w;
            bool positive;
        };
        std::vector<Job> jobs;
        const std::uint64_t side_seed = derive_seed(seed, {side == ArmSide::Left ? 0u : 1u});
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const auto& p = pairs[i];
            jobs.push_back({p.frame, p.elbow, p.wrist, true});
            Rng rng(derive_seed(side_seed, {i}));
            for (int k = 0; k < kPuppetOffsetNegatives; ++k) {
                const Point2 e = size.clamp(p.elbow + random_offset(rng));
                const Point2 w = size.clamp(p.wrist + random_offset(rng));
                if (distance(e, w) > 1.0) jobs.push_back({p.frame, e, w, false});
            }
            if (const auto& sw = swap[std::size_t(p.frame)]; sw && distance(*sw, p.elbow) > 1.0)
                jobs.push_back({p.frame, p.elbow, *sw, false});
        }
        std::vector<LimbFeatures> feats(jobs.size());
        parallel_for(jobs.size(), [&](std::size_t i) {
            feats[i] = limb_features(frames[jobs[i].frame], jobs[i].e, jobs[i].w, m.width, arm.raster_len);
        });
        std::vector<std::vector<float>> hp, hn, rp, rn;
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            (jobs[i].positive ? hp : hn).push_back(std::move(feats[i].hog));
            (jobs[i].positive ? rp : rn).push_back(std::move(feats[i].rgb));
        }
        arm.positives = hp.size();
        arm.negatives = hn.size();
        SvmParams sp;
        sp.positive_weight = double(hn.size()) / double(hp.size());
        sp.seed = derive_seed(side_seed, {~0ull});
        sp.space = FeatureSpace::Hog;
        arm.hog_svm = train_svm(hp, hn, sp);
        sp.space = FeatureSpace::Rgb;
        arm.rgb_svm = train_svm(rp, rn, sp);
        arm.trained = true;
    }
    return m;
}

enum class LimbVerdict : std::uint8_t { Pass, Fail };

inline LimbVerdict evaluate_lower_arm(const PuppetModel& m, const RgbImage& frame, ArmSide side, Point2 elbow, Point2 wrist) {
    if (!frame.size().contains(elbow) || !frame.size().contains(wrist))
        throw std::invalid_argument("evaluate_lower_arm: endpoints must lie inside the frame");
    if (distance(elbow, wrist) <= 0) return LimbVerdict::Fail;
    const PuppetArm& arm = m.arm(side);
    if (!arm.trained) return LimbVerdict::Pass;
    const auto f = limb_features(frame, elbow, wrist, m.width, arm.raster_len);
    return arm.hog_svm.score(f.hog) >= 0 && arm.rgb_svm.score(f.rgb) >= 0 ? LimbVerdict::Pass : LimbVerdict::Fail;
}

/// Gaussian perturbations of both endpoints, tried in seeded order; the first passing pair wins.
inline std::optional<std::pair<Point2, Point2>> correct_lower_arm(const PuppetModel& m, const RgbImage& frame, ArmSide side,
                                                                  Point2 elbow, Point2 wrist, int n_samples,
                                                                  double sample_radius, std::uint64_t seed) {
    if (n_samples <= 0) return std::nullopt;
    if (evaluate_lower_arm(m, frame, side, elbow, wrist) == LimbVerdict::Pass)
        throw std::invalid_argument("correct_lower_arm: the pair already passes");
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, sample_radius);
    for (int k = 0; k < n_samples; ++k) {
        const Point2 e = elbow + Point2{g(rng), g(rng)};
        const Point2 w = wrist + Point2{g(rng), g(rng)};
        if (!frame.size().contains(e) || !frame.size().contains(w)) continue;
        if (evaluate_lower_arm(m, frame, side, e, w) == LimbVerdict::Pass) return std::make_pair(e, w);
    }
    return std::nullopt;
}

}  // namespace vidpose
