#include <gtest/gtest.h>

#include <sstream>

#include "vidpose/core/annotation.hpp"
#include "vidpose/core/annotation_io.hpp"
#include "vidpose/core/config.hpp"

using namespace vidpose;

namespace {

Annotation temporal(int frame, JointId j, Point2 p, int source, int hop = 1) {
    return Annotation{frame, j, p, 0.9, Provenance{Origin::Temporal, source, hop}, Status::Active};
}

}  // namespace

TEST(JointId, SevenValuesWithMirrorPairs) {
    EXPECT_EQ(kAllJoints.size(), 7u);
    EXPECT_EQ(mirror(JointId::LWrist), JointId::RWrist);
    EXPECT_EQ(mirror(JointId::RElbow), JointId::LElbow);
    EXPECT_EQ(mirror(JointId::LShoulder), JointId::RShoulder);
    EXPECT_EQ(mirror(JointId::Head), JointId::Head);
    for (JointId j : kAllJoints) {
        EXPECT_EQ(mirror(mirror(j)), j);
        EXPECT_EQ(parse_joint(joint_name(j)), j);
    }
    EXPECT_FALSE(parse_joint("LKnee").has_value());
}

TEST(Coverage, EmptySetIsZero) {
    AnnotationSet s;
    EXPECT_DOUBLE_EQ(coverage(s, JointId::Head, 100), 0.0);
}

TEST(Coverage, FullCoverage) {
    AnnotationSet s;
    for (int f = 0; f < 100; ++f) s.insert(make_initial(f, JointId::LWrist, {10, 10}));
    EXPECT_DOUBLE_EQ(coverage(s, JointId::LWrist, 100), 1.0);
    EXPECT_DOUBLE_EQ(coverage(s, JointId::RWrist, 100), 0.0);
}

TEST(Coverage, DuplicateFramesCountOnce) {
    AnnotationSet s;
    for (int f : {0, 1, 1, 5}) s.insert(make_initial(f, JointId::LWrist, {3, 4}));
    EXPECT_DOUBLE_EQ(coverage(s, JointId::LWrist, 10), 0.3);
}

TEST(Coverage, MonotoneUnderInsertAndDiscard) {
    AnnotationSet s;
    double last = 0;
    for (int f = 0; f < 10; ++f) {
        s.insert(make_initial(f, JointId::Head, {1, 1}));
        const double c = coverage(s, JointId::Head, 10);
        EXPECT_GE(c, last);
        last = c;
    }
    for (AnnotationSet::Id id = 0; id < s.size(); ++id) {
        s.discard(id);
        const double c = coverage(s, JointId::Head, 10);
        EXPECT_LE(c, last);
        last = c;
    }
    EXPECT_EQ(last, 0.0);
}

TEST(Coverage, RejectsZeroFrames) {
    EXPECT_THROW(coverage(AnnotationSet{}, JointId::Head, 0), std::invalid_argument);
}

TEST(ConsensusCardinality, DuplicateSourceCollapses) {
    AnnotationSet s;
    for (int src : {10, 10, 40}) s.insert(temporal(20, JointId::Head, {5, 5}, src));
    EXPECT_EQ(consensus_cardinality(s, 20, JointId::Head), 2u);
}

TEST(ConsensusCardinality, EmptyAndDistinct) {
    AnnotationSet s;
    EXPECT_EQ(consensus_cardinality(s, 0, JointId::Head), 0u);
    for (int src : {1, 2, 3, 4, 5}) s.insert(temporal(7, JointId::RElbow, {5, 5}, src));
    EXPECT_EQ(consensus_cardinality(s, 7, JointId::RElbow), 5u);
}

TEST(ConsensusCardinality, IgnoresInactive) {
    AnnotationSet s;
    const auto a = s.insert(temporal(3, JointId::Head, {1, 1}, 1));
    s.insert(temporal(3, JointId::Head, {1, 1}, 2));
    s.discard(a);
    EXPECT_EQ(consensus_cardinality(s, 3, JointId::Head), 1u);
}

TEST(AnnotationSet, LifecycleIsOneWay) {
    AnnotationSet s;
    const auto id = s.insert(make_initial(0, JointId::Head, {1, 2}));
    s.occlude(id);
    EXPECT_EQ(s[id].status, Status::Occluded);
    EXPECT_THROW(s.discard(id), std::logic_error);
    EXPECT_THROW(s.occlude(id), std::logic_error);
}

TEST(AnnotationSet, RejectsInvalidProvenance) {
    AnnotationSet s;
    Annotation a = make_initial(0, JointId::Head, {1, 1});
    a.provenance.hop_count = 2;
    EXPECT_THROW(s.insert(a), std::invalid_argument);
    Annotation b = temporal(0, JointId::Head, {1, 1}, 0, 0);
    EXPECT_THROW(s.insert(b), std::invalid_argument);
}

TEST(AnnotationSet, QueriesFollowInsertOrder) {
    AnnotationSet s;
    s.insert(temporal(4, JointId::LWrist, {1, 1}, 0));
    s.insert(make_initial(2, JointId::Head, {1, 1}));
    s.insert(temporal(4, JointId::LWrist, {2, 2}, 1));
    const auto ids = s.active_at(4, JointId::LWrist);
    ASSERT_EQ(ids.size(), 2u);
    EXPECT_EQ(ids[0], 0u);
    EXPECT_EQ(ids[1], 2u);
    const auto keys = s.keys();
    ASSERT_EQ(keys.size(), 2u);
    EXPECT_EQ(keys[0].first, 2);
    EXPECT_EQ(keys[1].first, 4);
    EXPECT_TRUE(s.has_settled(2, JointId::Head));
    EXPECT_FALSE(s.has_settled(4, JointId::LWrist));
}

TEST(AnnotationIo, RoundTripIsFieldForField) {
    AnnotationSet s;
    s.insert(make_initial(0, JointId::Head, {12.25, 30.125}));
    s.insert(Annotation{5, JointId::RWrist, {0.1, 1.0 / 3.0}, 0.98 * 0.98, {Origin::Temporal, 0, 2}, Status::Active});
    const auto d = s.insert(Annotation{6, JointId::LElbow, {7, 8}, 0.9, {Origin::Spatial, 0, 1}, Status::Active});
    s.discard(d);
    s.insert(Annotation{9, JointId::LShoulder, {70, 80}, 0.5, {Origin::Consensus, 0, 3}, Status::Active});
    std::stringstream ss;
    write_annotations(ss, s);
    const AnnotationSet back = read_annotations(ss);
    EXPECT_EQ(back, s);
}

TEST(AnnotationIo, UnknownJointNamesTheLine) {
    std::stringstream ss;
    ss << R"({"frame":0,"joint":"Head","x":1,"y":2,"confidence":1,"origin":"Initial","source_frame":0,"status":"Active"})"
       << "\n"
       << R"({"frame":1,"joint":"LKnee","x":1,"y":2,"confidence":1,"origin":"Initial","source_frame":1,"status":"Active"})"
       << "\n";
    try {
        read_annotations(ss, "init.jsonl");
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_EQ(e.file(), "init.jsonl");
    }
}

TEST(AnnotationIo, HopCountOptionalOnRead) {
    std::stringstream ss;
    ss << R"({"frame":3,"joint":"RElbow","x":1,"y":2,"confidence":1,"origin":"Initial","source_frame":3,"status":"Active"})"
       << "\n";
    const auto s = read_annotations(ss);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].provenance.hop_count, 0);
}

TEST(GroundTruthIo, RoundTrip) {
    GroundTruth gt(3, {64, 48});
    gt.at(0, JointId::Head) = {Point2{1.5, 2.5}, false};
    gt.at(2, JointId::RWrist) = {Point2{10, 20}, true};
    std::stringstream ss;
    write_ground_truth(ss, gt);
    const auto back = read_ground_truth(ss, "<gt>", 3, {64, 48});
    EXPECT_EQ(back, gt);
    EXPECT_TRUE(back.occluded(2, JointId::RWrist));
    EXPECT_FALSE(back.has(1, JointId::Head));
}

TEST(PipelineConfig, DefaultsValidate) {
    PipelineConfig c;
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.accuracy_d, 20.0);
    EXPECT_EQ(c.temporal_window, 30);
    EXPECT_EQ(c.agreement_std_max, 20.0);
    EXPECT_EQ(c.min_source_frames, 3);
    EXPECT_EQ(c.clusters_per_joint, 200);
    EXPECT_EQ(c.correction_samples, 25);
    EXPECT_EQ(c.iterations, 5);
}

TEST(PipelineConfig, FileOverridesAndErrorsNameTheField) {
    const auto doc = parse_kv_string("iterations = 2  # fewer\nparzen_sigma = 4.5\n[forest]\nn_trees = 3\n");
    const auto c = apply_kv(PipelineConfig{}, doc.root);
    EXPECT_EQ(c.iterations, 2);
    EXPECT_EQ(c.parzen_sigma, 4.5);
    EXPECT_EQ(c.forest.n_trees, 3);
    try {
        apply_kv(PipelineConfig{}, parse_kv_string("temporal_window = 0\n").root);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "temporal_window");
    }
    EXPECT_THROW(apply_kv(PipelineConfig{}, parse_kv_string("bogus = 1\n").root), ConfigError);
    EXPECT_THROW(apply_kv(PipelineConfig{}, parse_kv_string("agreement_std_max = -1\n").root), ConfigError);
}
