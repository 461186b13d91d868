#pragma once

// One self-evaluation pass over an annotation set: consensus per
// (frame, joint), occlusion flags, then the lower-arm check with correction.
// Decisions are computed in parallel and applied serially in key order.

#include <array>
#include <ostream>
#include <string_view>
#include <vector>

#include "vidpose/core/annotation.hpp"
#include "vidpose/core/annotation_io.hpp"
#include "vidpose/core/config.hpp"
#include "vidpose/selfeval/consensus.hpp"
#include "vidpose/selfeval/occlusion.hpp"
#include "vidpose/selfeval/puppet.hpp"
#include "vidpose/temporal/propagate.hpp"
#include "vidpose/util/parallel.hpp"
#include "vidpose/util/rng.hpp"

namespace vidpose {

enum class AuditReason : std::uint8_t { LowAgreement, PuppetFail, Occluded, InsufficientSources, Superseded, Corrected };

constexpr std::string_view audit_reason_name(AuditReason r) noexcept {
    constexpr std::array<std::string_view, 6> names = {"LowAgreement", "PuppetFail", "Occluded", "InsufficientSources",
                                                       "Superseded", "Corrected"};
    return names[static_cast<std::size_t>(r)];
}

/// One audit event at a (frame, joint). `count` is the number of annotations affected
/// (for InsufficientSources: how many were kept; the rest were superseded).
struct AuditEntry {
    int iteration = 0;
    int frame = 0;
    JointId joint = JointId::Head;
    AuditReason reason = AuditReason::LowAgreement;
    std::size_t count = 0;
    Point2 pos;
};

inline void write_audit(std::ostream& out, const std::vector<AuditEntry>& log) {
    for (const auto& e : log)
        out << "{\"iteration\":" << e.iteration << ",\"frame\":" << e.frame << ",\"joint\":\"" << joint_name(e.joint)
            << "\",\"reason\":\"" << audit_reason_name(e.reason) << "\",\"count\":" << e.count
            << ",\"x\":" << detail::format_double(e.pos.x) << ",\"y\":" << detail::format_double(e.pos.y) << "}\n";
}

struct SelfEvalModels {
    PuppetModel puppet;
    OcclusionDetector occlusion;
};

struct SelfEvalStats {
    std::array<std::size_t, kJointCount> added{}, discarded{}, corrected{}, occluded{};
    std::size_t consensus = 0, low_agreement = 0, insufficient = 0, puppet_fail = 0, corrections = 0, occlusion_flags = 0;
};

inline SelfEvalModels train_self_evaluation(const AnnotationSet& annos, const FrameStore& frames, const PipelineConfig& cfg,
                                            std::uint64_t seed) {
    return {train_puppet(annos, frames, cfg, derive_seed(seed, {std::uint64_t(Stage::Puppet)})),
            train_occlusion_detector(annos, frames, cfg, derive_seed(seed, {std::uint64_t(Stage::Occlusion)}))};
}

/// Runs the pass on annotations with id >= `since` (and the keys they touch).
/// `mask` carries occlusion flags in and out; Active annotations on flagged keys become Occluded.
inline SelfEvalStats apply_self_evaluation(AnnotationSet& set, const SelfEvalModels& models, const FrameStore& frames,
                                           const PipelineConfig& cfg, OcclusionMask& mask, std::size_t since,
                                           std::uint64_t seed, int iteration = 0, std::vector<AuditEntry>* audit = nullptr) {
    SelfEvalStats st;
    auto log = [&](int f, JointId j, AuditReason r, std::size_t n, Point2 p) {
        if (audit) audit->push_back({iteration, f, j, r, n, p});
    };
    auto discard = [&](AnnotationSet::Id id) {
        set.discard(id);
        ++st.discarded[index_of(set[id].joint)];
    };
    auto occlude = [&](AnnotationSet::Id id) {
        set.occlude(id);
        ++st.occluded[index_of(set[id].joint)];
    };
    auto insert = [&](const Annotation& a) {
        ++st.added[index_of(a.joint)];
        return set.insert(a);
    };

    // Keys touched since the watermark.
    std::vector<std::pair<int, JointId>> touched;
    {
        std::vector<std::array<bool, kJointCount>> seen(std::size_t(std::max(frames.size(), 0)));
        for (std::size_t id = since; id < set.size(); ++id) {
            const auto& a = set[id];
            if (a.frame >= 0 && a.frame < frames.size()) seen[std::size_t(a.frame)][index_of(a.joint)] = true;
        }
        for (int f = 0; f < int(seen.size()); ++f)
            for (JointId j : kAllJoints)
                if (seen[std::size_t(f)][index_of(j)]) touched.emplace_back(f, j);
    }

    // 1. Consensus.
    std::vector<std::vector<AnnotationSet::Id>> ids(touched.size());
    std::vector<std::optional<ConsensusResult>> results(touched.size());
    parallel_for(touched.size(), [&](std::size_t k) {
        const auto [f, j] = touched[k];
        ids[k] = set.active_at(f, j);
        bool settled = false;
        for (auto id : ids[k]) settled = settled || is_trusted(set[id].provenance.origin);
        if (settled || ids[k].empty()) return;
        std::vector<Annotation> cands;
        for (auto id : ids[k]) cands.push_back(set[id]);
        results[k] = consensus(cands, cfg);
    });
    for (std::size_t k = 0; k < touched.size(); ++k) {
        const auto [f, j] = touched[k];
        if (!results[k]) {
            // Already settled: later arrivals are redundant.
            std::size_t n = 0;
            std::optional<Point2> kept;
            for (auto id : ids[k]) {
                if (is_trusted(set[id].provenance.origin)) {
                    if (!kept) kept = set[id].pos;
                } else {
                    discard(id);
                    ++n;
                }
            }
            if (n > 0 && kept) log(f, j, AuditReason::Superseded, n, *kept);
            continue;
        }
        const auto& r = *results[k];
        switch (r.kind) {
            case ConsensusKind::Consensus:
                for (auto id : ids[k]) discard(id);
                insert(*r.annotation);
                ++st.consensus;
                break;
            case ConsensusKind::DiscardAll:
                for (auto id : ids[k]) discard(id);
                ++st.low_agreement;
                log(f, j, AuditReason::LowAgreement, ids[k].size(), set[ids[k][r.winner]].pos);
                break;
            case ConsensusKind::Insufficient:
                for (std::size_t i = 0; i < ids[k].size(); ++i)
                    if (i != r.winner) discard(ids[k][i]);
                ++st.insufficient;
                log(f, j, AuditReason::InsufficientSources, 1, set[ids[k][r.winner]].pos);
                break;
        }
    }

    // 2. Occlusion detection on new annotations, then the mask.
    std::vector<std::pair<int, JointId>> probe;
    for (const auto& [f, j] : touched)
        if (OcclusionDetector::covers(j) && set.has_active(f, j)) probe.emplace_back(f, j);
    std::vector<char> flagged(probe.size(), 0);
    parallel_for(probe.size(), [&](std::size_t k) {
        const auto [f, j] = probe[k];
        const auto act = set.active_at(f, j);
        flagged[k] = detect_occlusion(models.occlusion, frames[f], j, set[act.front()].pos) == Visibility::Occluded;
    });
    for (std::size_t k = 0; k < probe.size(); ++k)
        if (flagged[k]) {
            mask.set(probe[k].first, probe[k].second);
            ++st.occlusion_flags;
        }
    for (int f = 0; f < mask.frame_count(); ++f)
        for (JointId j : kAllJoints) {
            if (!mask.at(f, j)) continue;
            const auto act = set.active_at(f, j);
            if (act.empty()) continue;
            const Point2 p = set[act.front()].pos;
            for (auto id : act) occlude(id);
            log(f, j, AuditReason::Occluded, act.size(), p);
        }

    // 3. Lower arms with at least one new endpoint.
    struct ArmJob {
        int frame;
        ArmSide side;
        AnnotationSet::Id e, w;
    };
    std::vector<ArmJob> arms;
    for (const auto& [f, j] : touched)
        for (ArmSide side : {ArmSide::Left, ArmSide::Right}) {
            // Visit each (frame, side) once, from whichever endpoint key comes first.
            if (j != elbow_of(side) && j != wrist_of(side)) continue;
            if (j == wrist_of(side)) {
                bool elbow_touched = std::binary_search(touched.begin(), touched.end(), std::make_pair(f, elbow_of(side)));
                if (elbow_touched) continue;
            }
            const auto e = set.active_at(f, elbow_of(side));
            const auto w = set.active_at(f, wrist_of(side));
            if (e.size() == 1 && w.size() == 1) arms.push_back({f, side, e.front(), w.front()});
        }
    std::vector<char> failed(arms.size(), 0);
    std::vector<std::optional<std::pair<Point2, Point2>>> fixes(arms.size());
    parallel_for(arms.size(), [&](std::size_t k) {
        const auto& a = arms[k];
        const Point2 e = set[a.e].pos, w = set[a.w].pos;
        if (evaluate_lower_arm(models.puppet, frames[a.frame], a.side, e, w) == LimbVerdict::Pass) return;
        failed[k] = 1;
        if (distance(e, w) > 0)
            fixes[k] = correct_lower_arm(models.puppet, frames[a.frame], a.side, e, w, cfg.correction_samples,
                                         cfg.correction_radius,
                                         derive_seed(seed, {std::uint64_t(Stage::Correction), std::uint64_t(a.frame),
                                                            a.side == ArmSide::Left ? 0u : 1u}));
    });
    for (std::size_t k = 0; k < arms.size(); ++k) {
        if (!failed[k]) continue;
        const auto& a = arms[k];
        const Annotation e = set[a.e], w = set[a.w];
        discard(a.e);
        discard(a.w);
        ++st.puppet_fail;
        log(a.frame, e.joint, AuditReason::PuppetFail, 1, e.pos);
        log(a.frame, w.joint, AuditReason::PuppetFail, 1, w.pos);
        if (!fixes[k]) continue;
        for (const auto& [orig, pos] : {std::make_pair(e, fixes[k]->first), std::make_pair(w, fixes[k]->second)}) {
            Annotation c = orig;
            c.pos = pos;
            c.status = Status::Active;
            c.provenance = {Origin::Corrected, orig.provenance.source_frame, orig.provenance.hop_count + 1};
            insert(c);
            ++st.corrected[index_of(c.joint)];
            log(a.frame, c.joint, AuditReason::Corrected, 1, c.pos);
        }
        ++st.corrections;
    }
    return st;
}

}  // namespace vidpose
