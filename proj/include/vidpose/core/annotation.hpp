#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vidpose/core/types.hpp"

namespace vidpose {

enum class Origin : std::uint8_t { Initial, Spatial, Temporal, Corrected, Consensus };
enum class Status : std::uint8_t { Active, Discarded, Occluded };

constexpr std::string_view origin_name(Origin o) noexcept {
    constexpr std::array<std::string_view, 5> names = {"Initial", "Spatial", "Temporal", "Corrected",
                                                       "Consensus"};
    return names[static_cast<std::size_t>(o)];
}

constexpr std::optional<Origin> parse_origin(std::string_view s) noexcept {
    for (int i = 0; i < 5; ++i)
        if (origin_name(Origin(i)) == s) return Origin(i);
    return std::nullopt;
}

constexpr std::string_view status_name(Status s) noexcept {
    constexpr std::array<std::string_view, 3> names = {"Active", "Discarded", "Occluded"};
    return names[static_cast<std::size_t>(s)];
}

constexpr std::optional<Status> parse_status(std::string_view s) noexcept {
    for (int i = 0; i < 3; ++i)
        if (status_name(Status(i)) == s) return Status(i);
    return std::nullopt;
}

struct Provenance {
    Origin origin = Origin::Initial;
    int source_frame = 0;  // frame of the Initial annotation this descends from
    int hop_count = 0;     // 0 iff origin == Initial

    bool valid() const noexcept { return (hop_count == 0) == (origin == Origin::Initial) && hop_count >= 0; }
    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Annotation {
    int frame = 0;
    JointId joint = JointId::Head;
    Point2 pos;
    double confidence = 1.0;
    Provenance provenance;
    Status status = Status::Active;

    bool active() const noexcept { return status == Status::Active; }
    friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// Confidence decay per propagation hop.
inline constexpr double kTemporalHopDecay = 0.98;
inline constexpr double kSpatialHopDecay = 0.9;

/// Annotations trusted as training data: initial labels and the outputs of consensus/correction.
constexpr bool is_trusted(Origin o) noexcept {
    return o == Origin::Initial || o == Origin::Consensus || o == Origin::Corrected;
}

inline Annotation make_initial(int frame, JointId joint, Point2 pos, double confidence = 1.0) {
    return Annotation{frame, joint, pos, confidence, Provenance{Origin::Initial, frame, 0}, Status::Active};
}

/// Append-only store of annotations indexed by (frame, joint).
///
/// Entries are never removed; lifecycle changes are status transitions
/// Active -> Discarded or Active -> Occluded. Ids are insertion indices, so
/// every query returns ids in insertion order and results are reproducible
/// for identical insert sequences.
class AnnotationSet {
public:
    using Id = std::size_t;

    Id insert(const Annotation& a) {
        if (!a.provenance.valid())
            throw std::invalid_argument("annotation provenance: hop_count must be 0 iff origin is Initial");
        if (!a.pos.finite()) throw std::invalid_argument("annotation position must be finite");
        items_.push_back(a);
        index_[key(a.frame, a.joint)].push_back(items_.size() - 1);
        return items_.size() - 1;
    }

    void insert_all(std::span<const Annotation> as) {
        for (const auto& a : as) insert(a);
    }

    std::size_t size() const noexcept { return items_.size(); }
    bool empty() const noexcept { return items_.empty(); }
    const Annotation& operator[](Id id) const { return items_.at(id); }
    const std::vector<Annotation>& all() const noexcept { return items_; }

    void discard(Id id) { transition(id, Status::Discarded); }
    void occlude(Id id) { transition(id, Status::Occluded); }

    /// All ids at (frame, joint) regardless of status.
    std::span<const Id> ids_at(int frame, JointId joint) const {
        auto it = index_.find(key(frame, joint));
        if (it == index_.end()) return {};
        return it->second;
    }

    std::vector<Id> active_at(int frame, JointId joint) const {
        std::vector<Id> out;
        for (Id id : ids_at(frame, joint))
            if (items_[id].active()) out.push_back(id);
        return out;
    }

    bool has_active(int frame, JointId joint) const {
        for (Id id : ids_at(frame, joint))
            if (items_[id].active()) return true;
        return false;
    }

    /// True when (frame, joint) holds an Active trusted annotation (Initial, Consensus or Corrected).
    bool has_settled(int frame, JointId joint) const {
        for (Id id : ids_at(frame, joint))
            if (items_[id].active() && is_trusted(items_[id].provenance.origin)) return true;
        return false;
    }

    std::size_t count_active() const noexcept {
        std::size_t n = 0;
        for (const auto& a : items_) n += a.active();
        return n;
    }

    std::size_t count_active(JointId joint) const noexcept {
        std::size_t n = 0;
        for (const auto& a : items_) n += a.active() && a.joint == joint;
        return n;
    }

    /// Occupied (frame, joint) keys in ascending (frame, joint) order.
    std::vector<std::pair<int, JointId>> keys() const {
        std::vector<std::pair<int, JointId>> out;
        out.reserve(index_.size());
        for (const auto& [k, ids] : index_) out.emplace_back(int(k / 8), JointId(k % 8));
        return out;
    }

    friend bool operator==(const AnnotationSet& a, const AnnotationSet& b) { return a.items_ == b.items_; }

private:
    static long long key(int frame, JointId j) { return static_cast<long long>(frame) * 8 + index_of(j); }

    void transition(Id id, Status to) {
        Annotation& a = items_.at(id);
        if (a.status != Status::Active)
            throw std::logic_error("annotation " + std::to_string(id) + " is not Active; status transitions are one-way");
        a.status = to;
    }

    std::vector<Annotation> items_;
    std::map<long long, std::vector<Id>> index_;
};

/// Fraction of frames holding at least one Active annotation for `joint`.
inline double coverage(const AnnotationSet& set, JointId joint, int n_frames) {
    if (n_frames < 1) throw std::invalid_argument("coverage: n_frames must be >= 1");
    std::set<int> frames;
    for (const auto& a : set.all())
        if (a.active() && a.joint == joint && a.frame >= 0 && a.frame < n_frames) frames.insert(a.frame);
    return double(frames.size()) / n_frames;
}

/// Number of distinct source frames among the Active annotations at (frame, joint).
inline std::size_t consensus_cardinality(const AnnotationSet& set, int frame, JointId joint) {
    std::set<int> sources;
    for (auto id : set.ids_at(frame, joint))
        if (set[id].active()) sources.insert(set[id].provenance.source_frame);
    return sources.size();
}

}  // namespace vidpose
