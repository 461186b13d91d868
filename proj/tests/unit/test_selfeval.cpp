#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "../support/oracles.hpp"
#include "vidpose/selfeval/self_evaluation.hpp"

using namespace vidpose;

namespace {

Annotation temporal(int frame, JointId j, Point2 p, int source, double conf = 0.9, int hops = 1) {
    Annotation a;
    a.frame = frame;
    a.joint = j;
    a.pos = p;
    a.confidence = conf;
    a.provenance = {Origin::Temporal, source, hops};
    return a;
}

std::vector<Annotation> from_points(const std::vector<Point2>& pts) {
    std::vector<Annotation> out;
    for (std::size_t i = 0; i < pts.size(); ++i) out.push_back(temporal(0, JointId::Head, pts[i], int(i) + 1));
    return out;
}

/// Tight symmetric cluster plus far outliers, rotated at random.
std::vector<Point2> cluster_instance(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0, 1);
    const Point2 c{100 + 50 * u(rng), 80 + 40 * u(rng)};
    const double a = 1 + 2 * u(rng), th = 2 * std::numbers::pi * u(rng);
    const Point2 ex{std::cos(th), std::sin(th)}, ey{-std::sin(th), std::cos(th)};
    std::vector<Point2> pts{c, c + ex * a, c - ex * a, c + ey * a, c - ey * a};
    const int outliers = 1 + int(u(rng) * 3);
    for (int k = 0; k < outliers; ++k) {
        const double r = 15 + 25 * u(rng), t = 2 * std::numbers::pi * u(rng);
        pts.push_back(c + Point2{r * std::cos(t), r * std::sin(t)});
    }
    std::shuffle(pts.begin(), pts.end(), rng);
    return pts;
}

class NullFrames {
public:
    explicit NullFrames(int n) {
        for (int i = 0; i < n; ++i) store.push_back(RgbImage(64, 64, 3, 100));
    }
    FrameStore store;
};

}  // namespace

TEST(Consensus, MatchesGridParzenArgmax) {
    std::mt19937_64 rng(2024);
    PipelineConfig cfg;
    cfg.agreement_std_max = 1e9;  // isolate the density step
    for (int i = 0; i < 100; ++i) {
        const auto pts = cluster_instance(rng);
        const auto r = consensus(from_points(pts), cfg);
        ASSERT_EQ(r.kind, ConsensusKind::Consensus);
        const Point2 g = oracle::parzen_grid_argmax(pts, cfg.parzen_sigma);
        EXPECT_LE(distance(r.annotation->pos, g), 1.0) << "instance " << i;
    }
}

TEST(Consensus, SpreadThreshold) {
    PipelineConfig cfg;
    const double k = std::sqrt(1.5);  // population std of {-a, 0, a} is a / k
    auto at_spread = [&](double s) {
        return consensus(from_points({{100 - s * k, 50}, {100, 50}, {100 + s * k, 50}}), cfg);
    };
    EXPECT_EQ(at_spread(19.9).kind, ConsensusKind::Consensus);
    EXPECT_NEAR(at_spread(19.9).spread, 19.9, 1e-9);
    EXPECT_EQ(at_spread(20.1).kind, ConsensusKind::DiscardAll);
}

TEST(Consensus, SourceCountThreshold) {
    PipelineConfig cfg;
    auto two = from_points({{10, 10}, {11, 10}, {10, 11}});
    two[2].provenance.source_frame = two[1].provenance.source_frame;
    EXPECT_EQ(consensus(two, cfg).kind, ConsensusKind::Insufficient);
    EXPECT_EQ(consensus(two, cfg).sources, 2u);
    EXPECT_EQ(consensus(from_points({{10, 10}, {11, 10}, {10, 11}}), cfg).kind, ConsensusKind::Consensus);
    // Source count is checked before spread.
    auto wide = from_points({{0, 0}, {100, 100}});
    EXPECT_EQ(consensus(wide, cfg).kind, ConsensusKind::Insufficient);
}

TEST(Consensus, InsufficientKeepsBestRanked) {
    PipelineConfig cfg;
    std::vector<Annotation> c{temporal(0, JointId::Head, {1, 1}, 1, 0.5, 3), temporal(0, JointId::Head, {2, 2}, 2, 0.9, 5),
                              temporal(0, JointId::Head, {3, 3}, 2, 0.9, 2)};
    EXPECT_EQ(consensus(c, cfg).winner, 2u);
    EXPECT_THROW(consensus(std::vector<Annotation>{}, cfg), std::invalid_argument);
}

TEST(Consensus, OutputProvenance) {
    PipelineConfig cfg;
    const auto r = consensus(from_points({{10, 10}, {11, 10}, {10, 11}}), cfg);
    EXPECT_EQ(r.annotation->provenance.origin, Origin::Consensus);
    EXPECT_GE(r.annotation->provenance.hop_count, 1);
}

TEST(LimbRectangle, AxisAlignedCorners) {
    const auto r = limb_rectangle({0, 0}, {10, 0}, 4);
    EXPECT_EQ(r[0], (Point2{0, -2}));
    EXPECT_EQ(r[1], (Point2{10, -2}));
    EXPECT_EQ(r[2], (Point2{10, 2}));
    EXPECT_EQ(r[3], (Point2{0, 2}));
    EXPECT_THROW(limb_rectangle({3, 3}, {3, 3}, 4), std::invalid_argument);
}

TEST(LimbRectangle, RotationEquivariant) {
    const Point2 e{20, 30}, w{55, 41};
    const auto base = limb_rectangle(e, w, 24);
    for (double th : {0.3, 1.7, 3.0, -2.2}) {
        auto rot = [&](Point2 p) {
            const Point2 d = p - e;
            return e + Point2{d.x * std::cos(th) - d.y * std::sin(th), d.x * std::sin(th) + d.y * std::cos(th)};
        };
        const auto r = limb_rectangle(e, rot(w), 24);
        for (int k = 0; k < 4; ++k) EXPECT_LT(distance(r[std::size_t(k)], rot(base[std::size_t(k)])), 1e-9);
    }
}

TEST(Puppet, UntrainedArmPassesAndPassingPairIsNotCorrected) {
    const RgbImage frame(64, 64, 3, 80);
    const PuppetModel m;
    EXPECT_EQ(evaluate_lower_arm(m, frame, ArmSide::Left, {10, 10}, {30, 30}), LimbVerdict::Pass);
    EXPECT_EQ(evaluate_lower_arm(m, frame, ArmSide::Left, {10, 10}, {10, 10}), LimbVerdict::Fail);
    EXPECT_THROW(evaluate_lower_arm(m, frame, ArmSide::Left, {10, 10}, {70, 30}), std::invalid_argument);
    EXPECT_THROW(correct_lower_arm(m, frame, ArmSide::Left, {10, 10}, {30, 30}, 5, 10, 1), std::invalid_argument);
}

TEST(SelfEvaluation, ConsensusReplacesCandidates) {
    NullFrames fr(5);
    AnnotationSet set;
    for (int s = 0; s < 3; ++s) set.insert(temporal(2, JointId::Head, {30.0 + s, 30}, 10 + s));
    OcclusionMask mask(5);
    std::vector<AuditEntry> audit;
    const auto st = apply_self_evaluation(set, SelfEvalModels{}, fr.store, PipelineConfig{}, mask, 0, 1, 1, &audit);
    EXPECT_EQ(st.consensus, 1u);
    EXPECT_EQ(st.discarded[index_of(JointId::Head)], 3u);
    EXPECT_EQ(st.added[index_of(JointId::Head)], 1u);
    const auto act = set.active_at(2, JointId::Head);
    ASSERT_EQ(act.size(), 1u);
    EXPECT_EQ(set[act[0]].provenance.origin, Origin::Consensus);
    EXPECT_EQ(set[act[0]].pos, (Point2{31, 30}));
    EXPECT_TRUE(audit.empty());
}

TEST(SelfEvaluation, LowAgreementDiscardsAllAndAudits) {
    NullFrames fr(5);
    AnnotationSet set;
    set.insert(temporal(1, JointId::LElbow, {5, 5}, 1));
    set.insert(temporal(1, JointId::LElbow, {60, 5}, 2));
    set.insert(temporal(1, JointId::LElbow, {5, 60}, 3));
    OcclusionMask mask(5);
    std::vector<AuditEntry> audit;
    const auto st = apply_self_evaluation(set, SelfEvalModels{}, fr.store, PipelineConfig{}, mask, 0, 1, 2, &audit);
    EXPECT_EQ(st.low_agreement, 1u);
    EXPECT_FALSE(set.has_active(1, JointId::LElbow));
    ASSERT_EQ(audit.size(), 1u);
    EXPECT_EQ(audit[0].reason, AuditReason::LowAgreement);
    EXPECT_EQ(audit[0].count, 3u);
    EXPECT_EQ(audit[0].iteration, 2);
}

TEST(SelfEvaluation, InsufficientKeepsOne) {
    NullFrames fr(5);
    AnnotationSet set;
    set.insert(temporal(1, JointId::RWrist, {5, 5}, 1, 0.7));
    set.insert(temporal(1, JointId::RWrist, {6, 5}, 2, 0.8));
    OcclusionMask mask(5);
    apply_self_evaluation(set, SelfEvalModels{}, fr.store, PipelineConfig{}, mask, 0, 1);
    const auto act = set.active_at(1, JointId::RWrist);
    ASSERT_EQ(act.size(), 1u);
    EXPECT_EQ(set[act[0]].pos, (Point2{6, 5}));
}

TEST(SelfEvaluation, SettledKeysDropLaterArrivals) {
    NullFrames fr(5);
    AnnotationSet set;
    set.insert(make_initial(3, JointId::Head, {20, 20}));
    const std::size_t since = set.size();
    set.insert(temporal(3, JointId::Head, {22, 20}, 1));
    OcclusionMask mask(5);
    apply_self_evaluation(set, SelfEvalModels{}, fr.store, PipelineConfig{}, mask, since, 1);
    EXPECT_EQ(set.active_at(3, JointId::Head), std::vector<AnnotationSet::Id>{0});
}

TEST(SelfEvaluation, MaskOccludesActiveAnnotations) {
    NullFrames fr(5);
    AnnotationSet set;
    set.insert(make_initial(4, JointId::RElbow, {20, 20}));
    OcclusionMask mask(5);
    mask.set(4, JointId::RElbow);
    std::vector<AuditEntry> audit;
    const auto st = apply_self_evaluation(set, SelfEvalModels{}, fr.store, PipelineConfig{}, mask, set.size(), 1, 1, &audit);
    EXPECT_EQ(set[0].status, Status::Occluded);
    EXPECT_EQ(st.occluded[index_of(JointId::RElbow)], 1u);
    ASSERT_EQ(audit.size(), 1u);
    EXPECT_EQ(audit[0].reason, AuditReason::Occluded);
}

TEST(SelfEvaluation, OnlyTouchedKeysAreVisited) {
    NullFrames fr(5);
    AnnotationSet set;
    set.insert(temporal(0, JointId::Head, {5, 5}, 1));
    set.insert(temporal(0, JointId::Head, {60, 60}, 2));
    set.insert(temporal(0, JointId::Head, {5, 60}, 3));
    OcclusionMask mask(5);
    apply_self_evaluation(set, SelfEvalModels{}, fr.store, PipelineConfig{}, mask, set.size(), 1);
    EXPECT_EQ(set.count_active(), 3u);
}

TEST(Audit, JsonLines) {
    std::ostringstream out;
    write_audit(out, {{3, 17, JointId::LWrist, AuditReason::PuppetFail, 1, {10.5, 20}}});
    EXPECT_EQ(out.str(), "{\"iteration\":3,\"frame\":17,\"joint\":\"LWrist\",\"reason\":\"PuppetFail\",\"count\":1,\"x\":10.5,\"y\":20}\n");
}
