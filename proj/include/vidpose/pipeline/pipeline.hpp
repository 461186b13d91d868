#pragma once

// Iteration controller: spatial matching, temporal propagation and
// self-evaluation, followed by retraining the personalized detector on the
// annotations that survive.

#include <array>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vidpose/core/annotation.hpp"
#include "vidpose/core/config.hpp"
#include "vidpose/core/errors.hpp"
#include "vidpose/flow/flow_cache.hpp"
#include "vidpose/pipeline/detector.hpp"
#include "vidpose/selfeval/self_evaluation.hpp"
#include "vidpose/spatial/spatial.hpp"
#include "vidpose/temporal/propagate.hpp"
#include "vidpose/util/rng.hpp"

namespace vidpose {

struct JointIterationStats {
    double coverage = 0.0;
    std::optional<double> accuracy;             // detector, percent at accuracy_d
    std::optional<double> annotation_accuracy;  // Active annotations, percent at accuracy_d
    std::size_t added = 0, discarded = 0, corrected = 0, occluded = 0;
    std::size_t active_before = 0, active_after = 0;
};

struct StageCounts {
    std::size_t spatial_candidates = 0, spatial_accepted = 0, spatial_low_significance = 0, spatial_registration_rejected = 0;
    std::size_t temporal_seeds = 0, temporal_added = 0;
    std::size_t consensus = 0, low_agreement = 0, insufficient = 0, puppet_fail = 0, corrections = 0, occlusion_flags = 0;
};

struct StageSeconds {
    double spatial = 0, temporal = 0, self_evaluation = 0, detector = 0;
};

struct IterationReport {
    int iteration = 0;
    std::array<JointIterationStats, kJointCount> joints;
    std::optional<double> average_accuracy;
    StageCounts counts;
    StageSeconds seconds;

    /// active(k+1) = active(k) + added - discarded - occluded, per joint.
    bool reconciles() const {
        for (const auto& j : joints)
            if (j.active_after + j.discarded + j.occluded != j.active_before + j.added) return false;
        return true;
    }
};

using ProgressFn = std::function<void(const std::string&)>;

struct PipelineState {
    const FrameStore* frames = nullptr;
    FlowProvider* flows = nullptr;
    AnnotationSet annotations;
    OcclusionMask mask;
    std::size_t temporal_watermark = 0;
    int iteration = 0;
    PersonalizedDetector detector;  // trained on `annotations` as they stand
    std::vector<FrameScan> scans;   // detector output on every frame
    std::vector<AuditEntry> audit;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline void check_annotations(const AnnotationSet& set, const FrameStore& frames) {
    for (const auto& a : set.all()) {
        if (a.frame < 0 || a.frame >= frames.size())
            throw PipelineError("annotation frame " + std::to_string(a.frame) + " is outside the video");
        if (a.active() && !frames.frame_size().contains(a.pos))
            throw PipelineError("annotation at frame " + std::to_string(a.frame) + " lies outside the image");
    }
}

/// Retrains the detector, rescans every frame and fills coverage/accuracy fields.
inline void refresh_detector(PipelineState& s, const PipelineConfig& cfg, const GroundTruth* gt, IterationReport& rep) {
    const auto t0 = std::chrono::steady_clock::now();
    s.detector = personalize(s.annotations, *s.frames, cfg, stage_seed(cfg.rng_seed, Stage::Detector, std::uint64_t(s.iteration)));
    s.scans = scan_all(s.detector, *s.frames, cfg);
    for (JointId j : kAllJoints) rep.joints[index_of(j)].coverage = coverage(s.annotations, j, std::max(1, s.frames->size()));
    if (gt) {
        const auto acc = evaluate_accuracy(predictions_of(s.scans), *gt, cfg.accuracy_d, cfg.exclude_occluded_gt);
        for (JointId j : kAllJoints) {
            rep.joints[index_of(j)].accuracy = acc.per_joint[index_of(j)];
            rep.joints[index_of(j)].annotation_accuracy =
                annotation_accuracy(s.annotations, *gt, j, cfg.accuracy_d, cfg.exclude_occluded_gt);
        }
        rep.average_accuracy = acc.average;
    }
    rep.seconds.detector = seconds_since(t0);
}

}  // namespace detail

/// State before the first iteration, with its iteration-0 report.
inline std::pair<PipelineState, IterationReport> init_pipeline(const FrameStore& frames, FlowProvider& flows,
                                                               const AnnotationSet& initial, const PipelineConfig& cfg,
                                                               const GroundTruth* gt = nullptr) {
    cfg.validate();
    if (frames.size() < 1) throw PipelineError("no frames");
    if (initial.count_active() == 0) throw PipelineError("no seeds");
    detail::check_annotations(initial, frames);
    PipelineState s;
    s.frames = &frames;
    s.flows = &flows;
    s.annotations = initial;
    s.mask = OcclusionMask(frames.size());
    IterationReport rep;
    for (JointId j : kAllJoints) {
        const auto n = initial.count_active(j);
        rep.joints[index_of(j)].active_before = n;
        rep.joints[index_of(j)].active_after = n;
    }
    detail::refresh_detector(s, cfg, gt, rep);
    return {std::move(s), rep};
}

inline IterationReport run_iteration(PipelineState& s, const PipelineConfig& cfg, const GroundTruth* gt = nullptr,
                                     const ProgressFn& progress = {}) {
    if (s.annotations.count_active() == 0) throw PipelineError("no seeds");
    ++s.iteration;
    const std::uint64_t it = std::uint64_t(s.iteration);
    const FrameStore& frames = *s.frames;
    AnnotationSet& annos = s.annotations;
    IterationReport rep;
    rep.iteration = s.iteration;
    for (JointId j : kAllJoints) rep.joints[index_of(j)].active_before = annos.count_active(j);
    const std::size_t start = annos.size();
    auto note = [&](const std::string& m) {
        if (progress) progress("iteration " + std::to_string(s.iteration) + ": " + m);
    };

    // Spatial matching.
    auto t0 = std::chrono::steady_clock::now();
    if (cfg.enable_spatial) {
        const ExemplarBank bank = build_exemplar_bank(annos, frames, cfg, stage_seed(cfg.rng_seed, Stage::Exemplar, it));
        struct Job {
            JointId joint;
            Candidate cand;
        };
        std::vector<Job> jobs;
        for (int f = 0; f < frames.size(); ++f)
            for (JointId j : kAllJoints) {
                if (!s.detector.trained_for(j) || bank.at(j).empty() || annos.has_settled(f, j) || s.mask.at(f, j)) continue;
                for (const auto& c : s.scans[std::size_t(f)].candidates[index_of(j)]) jobs.push_back({j, c});
            }
        std::vector<Verification> out(jobs.size());
        parallel_for(jobs.size(), [&](std::size_t i) {
            out[i] = verify_and_transfer(jobs[i].cand, jobs[i].joint, bank, frames[jobs[i].cand.frame], cfg);
        });
        rep.counts.spatial_candidates = jobs.size();
        for (const auto& v : out) {
            if (v.verdict == Verdict::LowSignificance) ++rep.counts.spatial_low_significance;
            if (v.verdict == Verdict::RegistrationRejected) ++rep.counts.spatial_registration_rejected;
            if (!v.annotation) continue;
            annos.insert(*v.annotation);
            ++rep.joints[index_of(v.annotation->joint)].added;
            ++rep.counts.spatial_accepted;
        }
        note("spatial accepted " + std::to_string(rep.counts.spatial_accepted) + " of " + std::to_string(jobs.size()) +
             " candidates");
    }
    rep.seconds.spatial = detail::seconds_since(t0);

    // Temporal propagation from everything new since the last propagation.
    t0 = std::chrono::steady_clock::now();
    if (cfg.enable_temporal) {
        std::vector<Annotation> seeds;
        for (std::size_t id = s.temporal_watermark; id < annos.size(); ++id)
            if (annos[id].active() && annos[id].provenance.origin != Origin::Temporal) seeds.push_back(annos[id]);
        PropagationOptions opt;
        opt.window = cfg.temporal_window;
        opt.occlusion = &s.mask;
        opt.suppress = [&](int f, JointId j) { return annos.has_settled(f, j); };
        const auto tracks = propagate(seeds, *s.flows, frames.frame_size(), opt);
        for (const auto& a : tracks) {
            annos.insert(a);
            ++rep.joints[index_of(a.joint)].added;
        }
        rep.counts.temporal_seeds = seeds.size();
        rep.counts.temporal_added = tracks.size();
        s.temporal_watermark = annos.size();
        note("temporal added " + std::to_string(tracks.size()) + " from " + std::to_string(seeds.size()) + " seeds");
    }
    rep.seconds.temporal = detail::seconds_since(t0);

    // Self-evaluation with evaluators retrained on the current trusted set.
    t0 = std::chrono::steady_clock::now();
    const auto models = train_self_evaluation(annos, frames, cfg, stage_seed(cfg.rng_seed, Stage::Puppet, it));
    for (ArmSide side : {ArmSide::Left, ArmSide::Right})
        if (!models.puppet.arm(side).trained)
            note(std::string("puppet ") + (side == ArmSide::Left ? "left" : "right") + " arm skipped: " +
                 models.puppet.arm(side).skipped);
    const auto st = apply_self_evaluation(annos, models, frames, cfg, s.mask, start,
                                          stage_seed(cfg.rng_seed, Stage::Correction, it), s.iteration, &s.audit);
    for (JointId j : kAllJoints) {
        auto& js = rep.joints[index_of(j)];
        js.added += st.added[index_of(j)];
        js.discarded = st.discarded[index_of(j)];
        js.corrected = st.corrected[index_of(j)];
        js.occluded = st.occluded[index_of(j)];
        js.active_after = annos.count_active(j);
    }
    rep.counts.consensus = st.consensus;
    rep.counts.low_agreement = st.low_agreement;
    rep.counts.insufficient = st.insufficient;
    rep.counts.puppet_fail = st.puppet_fail;
    rep.counts.corrections = st.corrections;
    rep.counts.occlusion_flags = st.occlusion_flags;
    rep.seconds.self_evaluation = detail::seconds_since(t0);
    note("consensus " + std::to_string(st.consensus) + ", low agreement " + std::to_string(st.low_agreement) +
         ", puppet fail " + std::to_string(st.puppet_fail) + ", corrected " + std::to_string(st.corrections) +
         ", occlusion flags " + std::to_string(st.occlusion_flags));

    detail::refresh_detector(s, cfg, gt, rep);
    return rep;
}

struct RunResult {
    AnnotationSet annotations;
    PersonalizedDetector detector;
    std::vector<JointPrediction> predictions;
    std::vector<IterationReport> reports;  // reports[0] describes the initial set
    std::vector<AuditEntry> audit;
};

/// Runs cfg.iterations iterations, then predicts every frame with the final detector.
inline RunResult run(const PipelineConfig& cfg, const FrameStore& frames, const AnnotationSet& initial,
                     const GroundTruth* gt = nullptr, FlowProvider* flows = nullptr, const ProgressFn& progress = {}) {
    std::unique_ptr<FlowCache> own;
    if (!flows) {
        own = std::make_unique<FlowCache>(frames);
        flows = own.get();
    }
    auto [state, rep0] = init_pipeline(frames, *flows, initial, cfg, gt);
    RunResult r;
    r.reports.push_back(rep0);
    if (progress) progress("initial detector trained");
    for (int k = 0; k < cfg.iterations; ++k) r.reports.push_back(run_iteration(state, cfg, gt, progress));
    r.predictions = predictions_of(state.scans);
    r.detector = std::move(state.detector);
    r.annotations = std::move(state.annotations);
    r.audit = std::move(state.audit);
    return r;
}

}  // namespace vidpose
