#pragma once

// Spatial matching: the forest proposes candidate locations, exemplar SVMs
// verify them, and registration against the matched exemplar's context
// patch refines where the annotation lands.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "vidpose/core/annotation.hpp"
#include "vidpose/core/config.hpp"
#include "vidpose/flow/registration.hpp"
#include "vidpose/learners/exemplar.hpp"
#include "vidpose/learners/forest.hpp"
#include "vidpose/learners/kmeans.hpp"
#include "vidpose/util/parallel.hpp"
#include "vidpose/util/rng.hpp"

namespace vidpose {

inline constexpr int kVerifySide = 33;         // exemplar / candidate HOG window
inline constexpr int kContextSide = 49;        // registration window
inline constexpr double kNegativeMinDistance = 40.0;
inline constexpr std::size_t kMaxBankPositives = 400;

struct Candidate {
    int frame = 0;
    Point2 pos;
    double confidence = 0.0;
    friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Local maxima above conf_min, greedy NMS, capped. Sorted by confidence, ties by grid order.
inline std::vector<Candidate> candidates_from_map(const ConfidenceMap& m, int frame, double conf_min, double nms_radius,
                                                  int max_candidates) {
    std::vector<Candidate> peaks;
    for (int j = 0; j < m.grid_h; ++j)
        for (int i = 0; i < m.grid_w; ++i) {
            const float v = m.at(i, j);
            if (!(v > conf_min)) continue;
            bool peak = true;
            for (int dj = -1; dj <= 1 && peak; ++dj)
                for (int di = -1; di <= 1; ++di) {
                    const int x = i + di, y = j + dj;
                    if ((di || dj) && x >= 0 && y >= 0 && x < m.grid_w && y < m.grid_h && m.at(x, y) > v) {
                        peak = false;
                        break;
                    }
                }
            if (peak) peaks.push_back({frame, m.location(i, j), double(v)});
        }
    std::stable_sort(peaks.begin(), peaks.end(), [](const Candidate& a, const Candidate& b) { return a.confidence > b.confidence; });
    std::vector<Candidate> out;
    for (const auto& c : peaks) {
        if (int(out.size()) >= max_candidates) break;
        bool suppressed = false;
        for (const auto& k : out) suppressed = suppressed || distance(k.pos, c.pos) <= nms_radius;
        if (!suppressed) out.push_back(c);
    }
    return out;
}

/// Candidates over every frame. Frames where `skip(frame)` holds are not scanned.
inline std::vector<Candidate> propose_candidates(const RandomForest& forest, const FrameStore& frames, JointId joint,
                                                 const PipelineConfig& cfg,
                                                 const std::function<bool(int)>& skip = {}) {
    if (!forest.trained_for(joint))
        throw std::invalid_argument(std::string("propose_candidates: forest not trained for ") + std::string(joint_name(joint)));
    std::vector<std::vector<Candidate>> slots(std::size_t(frames.size()));
    parallel_for(slots.size(), [&](std::size_t f) {
        if (skip && skip(int(f))) return;
        const auto m = forest_confidence_map(forest, frames[int(f)], joint, cfg.detector_stride);
        slots[f] = candidates_from_map(m, int(f), cfg.conf_min, cfg.nms_radius, cfg.max_candidates_per_frame);
    });
    std::vector<Candidate> out;
    for (auto& s : slots) out.insert(out.end(), s.begin(), s.end());
    return out;
}

/// Samples `count` negative locations at least `min_distance` from every Active
/// annotation of `joint` in the sampled frame. Only frames with such an annotation are used.
inline std::vector<std::pair<int, Point2>> sample_negative_locations(const AnnotationSet& annos, FrameSize size, JointId joint,
                                                                     std::size_t count, double min_distance, std::uint64_t seed) {
    std::vector<int> frames;
    for (const auto& [f, j] : annos.keys())
        if (j == joint && annos.has_active(f, j)) frames.push_back(f);
    std::vector<std::pair<int, Point2>> out;
    if (frames.empty()) return out;
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, frames.size() - 1);
    std::uniform_real_distribution<double> ux(0.0, size.width - 1.0), uy(0.0, size.height - 1.0);
    const std::size_t max_tries = count * 50;
    for (std::size_t tries = 0; out.size() < count && tries < max_tries; ++tries) {
        const int f = frames[pick(rng)];
        const Point2 p{std::round(ux(rng)), std::round(uy(rng))};
        bool ok = true;
        for (auto id : annos.active_at(f, joint)) ok = ok && distance(annos[id].pos, p) >= min_distance;
        if (ok) out.emplace_back(f, p);
    }
    return out;
}

/// Exemplars for one joint: k-means medoids of trusted annotation patches, each with its own SVM.
inline std::vector<Exemplar> build_joint_exemplars(const AnnotationSet& annos, const FrameStore& frames, JointId joint,
                                                   const PipelineConfig& cfg, std::uint64_t seed) {
    std::vector<const Annotation*> src;
    for (const auto& a : annos.all())
        if (a.active() && a.joint == joint && is_trusted(a.provenance.origin)) src.push_back(&a);
    if (src.empty()) return {};
    std::stable_sort(src.begin(), src.end(), [](auto* a, auto* b) { return a->frame < b->frame; });
    if (src.size() > kMaxBankPositives) {
        std::vector<const Annotation*> sub;
        for (std::size_t i = 0; i < kMaxBankPositives; ++i) sub.push_back(src[i * src.size() / kMaxBankPositives]);
        src.swap(sub);
    }

    const auto negs = sample_negative_locations(annos, frames.frame_size(), joint, std::size_t(cfg.max_exemplar_negatives),
                                                kNegativeMinDistance, derive_seed(seed, {1}));
    if (negs.size() < kMinExemplarNegatives) return {};
    std::vector<std::vector<float>> neg_hog(negs.size());
    parallel_for(negs.size(), [&](std::size_t i) {
        neg_hog[i] = hog(extract_patch(frames[negs[i].first], negs[i].second, kVerifySide, negs[i].first)).values;
    });

    std::vector<Patch> patches(src.size());
    parallel_for(src.size(), [&](std::size_t i) { patches[i] = extract_patch(frames[src[i]->frame], src[i]->pos, kVerifySide, src[i]->frame); });
    const auto medoids = kmeans_medoid_indices(patches, cfg.clusters_per_joint, derive_seed(seed, {2}));

    std::vector<Exemplar> out(medoids.size());
    parallel_for(medoids.size(), [&](std::size_t k) {
        const std::size_t i = medoids[k];
        ExemplarParams ep;
        ep.seed = derive_seed(seed, {3, k});
        out[k].medoid = patches[i];
        out[k].context = extract_patch(frames[src[i]->frame], src[i]->pos, kContextSide, src[i]->frame);
        out[k].model = train_exemplar(hog(patches[i]).values, neg_hog, ep);
        out[k].source = *src[i];
    });
    return out;
}

inline ExemplarBank build_exemplar_bank(const AnnotationSet& annos, const FrameStore& frames, const PipelineConfig& cfg,
                                        std::uint64_t seed) {
    ExemplarBank bank;
    for (JointId j : kAllJoints) bank.at(j) = build_joint_exemplars(annos, frames, j, cfg, derive_seed(seed, {index_of(j)}));
    return bank;
}

enum class Verdict : std::uint8_t { Accepted, LowSignificance, RegistrationRejected, OutOfFrame };

struct Verification {
    Verdict verdict = Verdict::LowSignificance;
    std::optional<Annotation> annotation;
    double z = -INFINITY;
    double residual = 0.0;
    std::size_t exemplar = 0;
};

inline RegistrationParams registration_params(const PipelineConfig& cfg) {
    RegistrationParams rp;
    rp.search_radius = cfg.registration_radius;
    rp.smoothness = cfg.registration_smoothness;
    return rp;
}

/// Transfers an exemplar's annotation onto a candidate location of `frame`.
inline Verification verify_and_transfer(const Candidate& cand, JointId joint, const ExemplarBank& bank, const RgbImage& frame,
                                        const PipelineConfig& cfg) {
    Verification v;
    const auto sig = significance(bank, joint, extract_patch(frame, cand.pos, kVerifySide, cand.frame));
    v.z = sig.z;
    v.exemplar = sig.index;
    if (!(sig.z >= cfg.significance_min)) return v;

    const Exemplar& ex = bank.at(joint)[sig.index];
    const Patch target = extract_patch(frame, cand.pos, ex.context.side, cand.frame);
    const DisplacementField field = register_patches(ex.context, target, registration_params(cfg));
    v.residual = field.residual;
    if (field.residual > cfg.registration_reject) {
        v.verdict = Verdict::RegistrationRejected;
        return v;
    }
    // The exemplar's joint sits at its context patch centre.
    const double c = ex.context.half();
    const Point2 pos = cand.pos + field.displacement_at({c, c});
    if (!frame.size().contains(pos)) {
        v.verdict = Verdict::OutOfFrame;
        return v;
    }
    Annotation a;
    a.frame = cand.frame;
    a.joint = joint;
    a.pos = pos;
    a.confidence = ex.source.confidence * kSpatialHopDecay;
    a.provenance = {Origin::Spatial, ex.source.provenance.source_frame, ex.source.provenance.hop_count + 1};
    v.verdict = Verdict::Accepted;
    v.annotation = a;
    return v;
}

}  // namespace vidpose
