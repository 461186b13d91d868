#pragma once

// Temporal propagation: seeds are advected frame by frame through the
// adjacent-pair flow fields, forwards and backwards, up to a window.

#include <array>
#include <functional>
#include <vector>

#include "vidpose/core/annotation.hpp"
#include "vidpose/flow/flow_cache.hpp"
#include "vidpose/util/parallel.hpp"

namespace vidpose {

/// Per (frame, joint) occlusion flags; a set flag blocks tracks for that joint.
class OcclusionMask {
public:
    OcclusionMask() = default;
    explicit OcclusionMask(int n_frames) : flags_(std::size_t(std::max(0, n_frames))) {}

    int frame_count() const noexcept { return int(flags_.size()); }
    bool at(int frame, JointId j) const {
        return frame >= 0 && frame < frame_count() && flags_[std::size_t(frame)][index_of(j)];
    }
    void set(int frame, JointId j, bool v = true) { flags_.at(std::size_t(frame))[index_of(j)] = v; }
    std::size_t count(JointId j) const {
        std::size_t n = 0;
        for (const auto& f : flags_) n += f[index_of(j)];
        return n;
    }

private:
    std::vector<std::array<bool, kJointCount>> flags_;
};

struct PropagationOptions {
    int window = 30;
    const OcclusionMask* occlusion = nullptr;
    // Frames where nothing should be emitted; the track still passes through them.
    std::function<bool(int frame, JointId joint)> suppress;
};

/// Track of one seed in one direction (+1 forward, -1 backward).
inline std::vector<Annotation> propagate_track(const Annotation& seed, FlowProvider& flows, FrameSize size, int direction,
                                               const PropagationOptions& opt) {
    std::vector<Annotation> out;
    Point2 p = seed.pos;
    if (!size.contains(p)) return out;
    double conf = seed.confidence;
    for (int k = 1; k <= opt.window; ++k) {
        const int from = seed.frame + direction * (k - 1);
        const int to = seed.frame + direction * k;
        if (to < 0 || to >= flows.frame_count()) break;
        if (opt.occlusion && opt.occlusion->at(to, seed.joint)) break;
        const FlowField& f = direction > 0 ? flows.forward(from) : flows.backward(from);
        const Point2 next = p + displacement_at(f, p);
        if (!size.contains(next)) break;
        p = next;
        conf *= kTemporalHopDecay;
        if (opt.suppress && opt.suppress(to, seed.joint)) continue;
        Annotation a;
        a.frame = to;
        a.joint = seed.joint;
        a.pos = p;
        a.confidence = conf;
        a.provenance = {Origin::Temporal, seed.provenance.source_frame, seed.provenance.hop_count + k};
        out.push_back(a);
    }
    return out;
}

/// Propagates every Active annotation in `seeds`. Output order: by seed, backward track then forward track.
inline std::vector<Annotation> propagate(const std::vector<Annotation>& seeds, FlowProvider& flows, FrameSize size,
                                         const PropagationOptions& opt = {}) {
    if (opt.window < 1) throw std::invalid_argument("propagate: window must be >= 1");
    std::vector<std::vector<Annotation>> slots(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) {
        const Annotation& s = seeds[i];
        if (!s.active()) return;
        if (s.frame < 0 || s.frame >= flows.frame_count())
            throw PipelineError("propagate: seed frame " + std::to_string(s.frame) + " has no flow");
        auto back = propagate_track(s, flows, size, -1, opt);
        auto fwd = propagate_track(s, flows, size, +1, opt);
        slots[i] = std::move(back);
        slots[i].insert(slots[i].end(), fwd.begin(), fwd.end());
    });
    std::vector<Annotation> out;
    for (auto& s : slots) out.insert(out.end(), s.begin(), s.end());
    return out;
}

inline AnnotationSet propagate(const AnnotationSet& seeds, FlowProvider& flows, FrameSize size, const PropagationOptions& opt = {}) {
    AnnotationSet out;
    for (const auto& a : propagate(seeds.all(), flows, size, opt)) out.insert(a);
    return out;
}

}  // namespace vidpose
