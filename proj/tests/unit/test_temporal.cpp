#include <gtest/gtest.h>

#include <cmath>

#include "vidpose/temporal/propagate.hpp"

using namespace vidpose;

namespace {

/// Uniform flow (u, v) forward and its negation backward.
class ConstantFlow final : public FlowProvider {
public:
    ConstantFlow(int frames, FrameSize size, Point2 uv)
        : n_(frames), fw_(size.width, size.height, FlowDirection::Forward), bw_(size.width, size.height, FlowDirection::Backward) {
        std::fill(fw_.u.begin(), fw_.u.end(), float(uv.x));
        std::fill(fw_.v.begin(), fw_.v.end(), float(uv.y));
        std::fill(bw_.u.begin(), bw_.u.end(), float(-uv.x));
        std::fill(bw_.v.begin(), bw_.v.end(), float(-uv.y));
    }
    int frame_count() const override { return n_; }
    const FlowField& forward(int) override { return fw_; }
    const FlowField& backward(int) override { return bw_; }

private:
    int n_;
    FlowField fw_, bw_;
};

const FrameSize kSize{200, 120};

}  // namespace

TEST(Propagate, ZeroMotionFillsWindowBothWays) {
    ConstantFlow flows(100, kSize, {0, 0});
    const auto seed = make_initial(50, JointId::LElbow, {80, 60});
    PropagationOptions opt;
    opt.window = 30;
    const auto out = propagate(std::vector<Annotation>{seed}, flows, kSize, opt);
    ASSERT_EQ(out.size(), 60u);
    std::set<int> frames;
    for (const auto& a : out) {
        frames.insert(a.frame);
        EXPECT_EQ(a.pos, seed.pos);
        EXPECT_EQ(a.joint, JointId::LElbow);
        EXPECT_EQ(a.provenance.origin, Origin::Temporal);
        EXPECT_EQ(a.provenance.source_frame, 50);
        EXPECT_EQ(a.provenance.hop_count, std::abs(a.frame - 50));
    }
    EXPECT_EQ(*frames.begin(), 20);
    EXPECT_EQ(*frames.rbegin(), 80);
    EXPECT_EQ(frames.count(50), 0u);
}

TEST(Propagate, ConfidenceDecaysPerHop) {
    ConstantFlow flows(40, kSize, {0, 0});
    const auto out = propagate(std::vector<Annotation>{make_initial(10, JointId::Head, {50, 50}, 0.8)}, flows, kSize);
    for (const auto& a : out) EXPECT_NEAR(a.confidence, 0.8 * std::pow(0.98, std::abs(a.frame - 10)), 1e-12);
}

TEST(Propagate, ConstantFlowDriftIsSmall) {
    const Point2 uv{0.7, -0.3};
    ConstantFlow flows(80, kSize, uv);
    PropagationOptions opt;
    opt.window = 20;
    const Point2 start{100, 70};
    for (const auto& a : propagate(std::vector<Annotation>{make_initial(40, JointId::RWrist, start)}, flows, kSize, opt)) {
        const Point2 expected = start + uv * double(a.frame - 40);
        EXPECT_LE(distance(a.pos, expected), 0.05 * opt.window);
    }
}

TEST(Propagate, ConstantTranslationTracked) {
    ConstantFlow flows(60, kSize, {2, 0});
    for (const auto& a : propagate(std::vector<Annotation>{make_initial(0, JointId::Head, {50, 50})}, flows, kSize))
        EXPECT_LE(distance(a.pos, Point2{50.0 + 2 * a.frame, 50}), 1.0);
}

TEST(Propagate, StopsAtVideoEnds) {
    ConstantFlow flows(10, kSize, {0, 0});
    const auto out = propagate(std::vector<Annotation>{make_initial(2, JointId::Head, {50, 50})}, flows, kSize);
    EXPECT_EQ(out.size(), 9u);  // 2 backward, 7 forward
}

TEST(Propagate, StopsWhenLeavingFrame) {
    ConstantFlow flows(50, kSize, {5, 0});
    const auto out = propagate(std::vector<Annotation>{make_initial(10, JointId::Head, {190, 50})}, flows, kSize);
    for (const auto& a : out) EXPECT_TRUE(kSize.contains(a.pos));
    int forward = 0;
    for (const auto& a : out) forward += a.frame > 10;
    EXPECT_EQ(forward, 1);
}

TEST(Propagate, OcclusionMaskBlocksTrack) {
    ConstantFlow flows(60, kSize, {0, 0});
    OcclusionMask mask(60);
    mask.set(35, JointId::LWrist);
    PropagationOptions opt;
    opt.occlusion = &mask;
    const auto out = propagate(std::vector<Annotation>{make_initial(30, JointId::LWrist, {60, 60})}, flows, kSize, opt);
    int forward = 0;
    for (const auto& a : out) {
        forward += a.frame > 30;
        EXPECT_LT(a.frame, 35);
    }
    EXPECT_EQ(forward, 4);
    // Other joints pass through.
    EXPECT_EQ(propagate(std::vector<Annotation>{make_initial(30, JointId::RWrist, {60, 60})}, flows, kSize, opt).size(), 59u);
}

TEST(Propagate, SuppressSkipsEmissionButKeepsTracking) {
    ConstantFlow flows(60, kSize, {1, 0});
    PropagationOptions opt;
    opt.window = 5;
    opt.suppress = [](int f, JointId) { return f == 22; };
    const auto out = propagate(std::vector<Annotation>{make_initial(20, JointId::Head, {50, 50})}, flows, kSize, opt);
    EXPECT_EQ(out.size(), 9u);
    for (const auto& a : out) {
        EXPECT_NE(a.frame, 22);
        if (a.frame == 23) {
            EXPECT_NEAR(a.pos.x, 53, 1e-9);
        }
    }
}

TEST(Propagate, InactiveSeedsIgnoredAndBadInputRejected) {
    ConstantFlow flows(20, kSize, {0, 0});
    auto s = make_initial(5, JointId::Head, {50, 50});
    s.status = Status::Discarded;
    EXPECT_TRUE(propagate(std::vector<Annotation>{s}, flows, kSize).empty());
    PropagationOptions opt;
    opt.window = 0;
    EXPECT_THROW(propagate(std::vector<Annotation>{make_initial(5, JointId::Head, {50, 50})}, flows, kSize, opt),
                 std::invalid_argument);
    EXPECT_THROW(propagate(std::vector<Annotation>{make_initial(25, JointId::Head, {50, 50})}, flows, kSize), PipelineError);
}

TEST(Propagate, OutputOrderIndependentOfThreads) {
    ConstantFlow flows(100, kSize, {0.3, 0.2});
    std::vector<Annotation> seeds;
    for (int f = 5; f < 95; f += 7) seeds.push_back(make_initial(f, JointId(f % 7), {40.0 + f, 60}));
    set_thread_limit(1);
    const auto a = propagate(seeds, flows, kSize);
    set_thread_limit(4);
    const auto b = propagate(seeds, flows, kSize);
    set_thread_limit(0);
    EXPECT_EQ(a, b);
}
