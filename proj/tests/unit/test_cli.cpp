#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "vidpose/cli/commands.hpp"

using namespace vidpose;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        root = fs::temp_directory_path() /
               ("vidpose_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(root);
        fs::create_directories(root);
        config = (root / "small.toml").string();
        write_file(config,
                   "clusters_per_joint = 10\niterations = 1\n[scene]\nn_frames = 10\nwidth = 288\nheight = 224\n");
    }
    void TearDown() override { fs::remove_all(root); }

    cli::SynthOptions synth_opts(const std::string& out) {
        cli::SynthOptions o;
        o.config = config;
        o.out = (root / out).string();
        o.seed = 3;
        o.initial_coverage = 0.5;
        return o;
    }

    fs::path root;
    std::string config;
    std::ostringstream log, err;
};

}  // namespace

TEST_F(Cli, SynthWritesAllOutputsDeterministically) {
    ASSERT_EQ(cli::cmd_synth(synth_opts("a"), log, err), cli::kOk) << err.str();
    ASSERT_EQ(cli::cmd_synth(synth_opts("b"), log, err), cli::kOk) << err.str();
    for (const char* f : {"ground_truth.jsonl", "initial.jsonl", "scene.toml", "frames/frame_00000.png", "frames/frame_00009.png"})
        EXPECT_TRUE(fs::exists(root / "a" / f)) << f;
    EXPECT_FALSE(fs::exists(root / "a" / "frames" / "frame_00010.png"));
    EXPECT_EQ(slurp(root / "a/initial.jsonl"), slurp(root / "b/initial.jsonl"));
    EXPECT_EQ(slurp(root / "a/frames/frame_00004.png"), slurp(root / "b/frames/frame_00004.png"));
    EXPECT_EQ(slurp(root / "a/scene.toml"), slurp(config));
}

TEST_F(Cli, UnwritableOutputIsIoError) {
    write_file(root / "plain", "x");
    auto o = synth_opts("plain/sub");
    EXPECT_EQ(cli::cmd_synth(o, log, err), cli::kIo);
}

TEST_F(Cli, BadConfigIsParseError) {
    write_file(root / "bad.toml", "not_a_key = 4\n");
    auto o = synth_opts("x");
    o.config = (root / "bad.toml").string();
    EXPECT_EQ(cli::cmd_synth(o, log, err), cli::kParse);
}

TEST_F(Cli, RunValidatesInputs) {
    ASSERT_EQ(cli::cmd_synth(synth_opts("s"), log, err), cli::kOk);
    cli::RunOptions r;
    r.frames = (root / "s/frames").string();
    r.config = config;
    r.out = (root / "run").string();
    r.quiet = true;

    write_file(root / "unknown.jsonl",
               R"({"frame":0,"joint":"LKnee","x":1,"y":1,"confidence":1,"origin":"Initial","source_frame":0,"status":"Active"})"
               "\n");
    r.initial = (root / "unknown.jsonl").string();
    EXPECT_EQ(cli::cmd_run(r, log, err), cli::kParse);

    write_file(root / "empty.jsonl", "");
    r.initial = (root / "empty.jsonl").string();
    EXPECT_EQ(cli::cmd_run(r, log, err), cli::kEmptyInput);

    r.initial = (root / "missing.jsonl").string();
    EXPECT_EQ(cli::cmd_run(r, log, err), cli::kIo);

    fs::create_directories(root / "noframes");
    r.frames = (root / "noframes").string();
    r.initial = (root / "s/initial.jsonl").string();
    EXPECT_EQ(cli::cmd_run(r, log, err), cli::kEmptyInput);
}

TEST_F(Cli, RunEvalReport) {
    ASSERT_EQ(cli::cmd_synth(synth_opts("s"), log, err), cli::kOk);
    cli::RunOptions r;
    r.frames = (root / "s/frames").string();
    r.initial = (root / "s/initial.jsonl").string();
    r.gt = (root / "s/ground_truth.jsonl").string();
    r.config = config;
    r.out = (root / "run").string();
    r.iterations = 2;
    r.seed = 5;
    ASSERT_EQ(cli::cmd_run(r, log, err), cli::kOk) << err.str();
    for (const char* f : {cli::kAnnotationsFile, cli::kPredictionsFile, cli::kDetectorFile, cli::kReportCsvFile,
                          cli::kReportSvgFile, cli::kAuditFile, cli::kTimingsFile})
        EXPECT_TRUE(fs::exists(root / "run" / f)) << f;

    // --iterations overrides the config: rows for iterations 0..2.
    std::ifstream csv(root / "run" / cli::kReportCsvFile);
    const auto rows = read_report_csv(csv);
    EXPECT_EQ(rows.size(), 3 * kJointCount);
    EXPECT_EQ(rows.back().iteration, 2);

    // Ground truth scored against itself.
    cli::EvalOptions e;
    e.predictions = (root / "s/ground_truth.jsonl").string();
    e.gt = e.predictions;
    e.csv = (root / "eval.csv").string();
    std::ostringstream out;
    EXPECT_EQ(cli::cmd_eval(e, out, err), cli::kOk);
    EXPECT_NE(out.str().find("average 100.00"), std::string::npos) << out.str();
    EXPECT_EQ(slurp(root / "eval.csv").rfind("joint,accuracy,evaluated\n", 0), 0u);

    e.predictions = (root / "run" / cli::kPredictionsFile).string();
    e.csv.reset();
    EXPECT_EQ(cli::cmd_eval(e, out, err), cli::kOk);

    // Predictions on frames the ground truth does not have.
    write_file(root / "far.jsonl", R"({"frame":500,"joint":"Head","x":1,"y":1,"confidence":1})"
                                   "\n");
    e.predictions = (root / "far.jsonl").string();
    EXPECT_EQ(cli::cmd_eval(e, out, err), cli::kEvalMismatch);

    cli::ReportOptions p{(root / "run" / cli::kReportCsvFile).string(), (root / "again.svg").string()};
    EXPECT_EQ(cli::cmd_report(p, err), cli::kOk);
    EXPECT_EQ(slurp(root / "again.svg"), slurp(root / "run" / cli::kReportSvgFile));
    p.csv = (root / "nope.csv").string();
    EXPECT_EQ(cli::cmd_report(p, err), cli::kIo);
}
