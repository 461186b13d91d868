// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.
//
//   acceptance [--only N[,N...]] [--cli PATH] [--work DIR]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "vidpose/flow/optical_flow.hpp"
#include "vidpose/learners/forest.hpp"
#include "vidpose/learners/kmeans.hpp"
#include "vidpose/learners/svm.hpp"
#include "vidpose/pipeline/pipeline.hpp"
#include "vidpose/selfeval/consensus.hpp"
#include "vidpose/selfeval/occlusion.hpp"
#include "vidpose/selfeval/puppet.hpp"
#include "vidpose/synth/scene.hpp"

#ifndef VIDPOSE_CLI_PATH
#define VIDPOSE_CLI_PATH ""
#endif

using namespace vidpose;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [x]");
    }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double secs(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + std::ptrdiff_t(v.size() / 2), v.end());
    return v[v.size() / 2];
}

// 1 ------------------------------------------------------------------------

Outcome flow_suite() {
    Outcome o;
    const auto t0 = Clock::now();
    const int w = 128, h = 112, m = 16;
    const RgbImage base = oracle::textured_frame(w, h);

    const FlowField z = compute_flow(base, base);
    double worst = 0;
    for (std::size_t i = 0; i < z.u.size(); ++i) worst = std::max(worst, std::hypot(double(z.u[i]), double(z.v[i])));
    o.check(worst <= 0.1, "zero-motion max " + fmt("%.3f", worst) + " px");

    // Every integer shift of length <= 8 px.
    double worst_median = 0;
    int shifts = 0;
    for (int dx = -8; dx <= 8; ++dx)
        for (int dy = -8; dy <= 8; ++dy) {
            if (dx * dx + dy * dy > 64) continue;
            ++shifts;
            const RgbImage b = oracle::textured_frame(w, h, {double(dx), double(dy)});
            const FlowField f = compute_flow(base, b);
            std::vector<double> e;
            for (int y = m; y < h - m; ++y)
                for (int x = m; x < w - m; ++x) e.push_back(std::hypot(f.du(x, y) - dx, f.dv(x, y) - dy));
            worst_median = std::max(worst_median, median(e));
        }
    o.check(worst_median <= 0.5,
            std::to_string(shifts) + " translations, worst median " + fmt("%.3f", worst_median) + " px");

    const RgbImage b = oracle::textured_frame(w, h, {3, -2});
    const FlowField fw = compute_flow(base, b, FlowDirection::Forward);
    const FlowField bw = compute_flow(b, base, FlowDirection::Backward);
    int ok = 0, n = 0;
    for (int y = m; y < h - m; ++y)
        for (int x = m; x < w - m; ++x) {
            const Point2 p{double(x), double(y)};
            const Point2 q = p + displacement_at(fw, p);
            ok += distance(p, q + displacement_at(bw, q)) <= 0.5;
            ++n;
        }
    o.check(double(ok) / n >= 0.95, "fw-bw consistent " + fmt("%.3f", double(ok) / n));
    const double t = secs(t0);
    o.check(t < 30, "runtime " + fmt("%.1f", t) + " s");
    return o;
}

// 2 ------------------------------------------------------------------------

Outcome consensus_suite() {
    Outcome o;
    const auto t0 = Clock::now();
    PipelineConfig cfg;
    cfg.agreement_std_max = 1e9;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0, 1);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        const Point2 c{60 + 100 * u(rng), 60 + 80 * u(rng)};
        const double a = 1 + 2 * u(rng), th = 2 * std::numbers::pi * u(rng);
        const Point2 ex{std::cos(th), std::sin(th)}, ey{-std::sin(th), std::cos(th)};
        std::vector<Point2> pts{c, c + ex * a, c - ex * a, c + ey * a, c - ey * a};
        const int outliers = 1 + int(3 * u(rng));
        for (int k = 0; k < outliers; ++k) {
            const double r = 15 + 25 * u(rng), t = 2 * std::numbers::pi * u(rng);
            pts.push_back(c + Point2{r * std::cos(t), r * std::sin(t)});
        }
        std::shuffle(pts.begin(), pts.end(), rng);
        std::vector<Annotation> cands;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            Annotation an;
            an.pos = pts[k];
            an.provenance = {Origin::Temporal, int(k), 1};
            cands.push_back(an);
        }
        const auto r = consensus(cands, cfg);
        const double d = r.annotation ? distance(r.annotation->pos, oracle::parzen_grid_argmax(pts, cfg.parzen_sigma)) : 1e9;
        worst = std::max(worst, d);
    }
    o.check(worst <= 1.0, "100 instances, worst " + fmt("%.2f", worst) + " px from grid argmax");

    // Threshold rule.
    PipelineConfig def;
    auto make = [](std::vector<std::pair<Point2, int>> pts) {
        std::vector<Annotation> c;
        for (auto [p, s] : pts) {
            Annotation a;
            a.pos = p;
            a.provenance = {Origin::Temporal, s, 1};
            c.push_back(a);
        }
        return c;
    };
    const double k = std::sqrt(1.5);
    const auto under = consensus(make({{{100 - 19.999 * k, 0}, 1}, {{100, 0}, 2}, {{100 + 19.999 * k, 0}, 3}}), def);
    const auto over = consensus(make({{{100 - 20.001 * k, 0}, 1}, {{100, 0}, 2}, {{100 + 20.001 * k, 0}, 3}}), def);
    const auto two = consensus(make({{{100, 0}, 1}, {{101, 0}, 2}, {{100, 1}, 2}}), def);
    const auto three = consensus(make({{{100, 0}, 1}, {{101, 0}, 2}, {{100, 1}, 3}}), def);
    const bool rule = under.kind == ConsensusKind::Consensus && over.kind == ConsensusKind::DiscardAll &&
                      two.kind == ConsensusKind::Insufficient && three.kind == ConsensusKind::Consensus;
    o.check(rule, "20 px / 3-source rule");
    const double t = secs(t0);
    o.check(t < 10, "runtime " + fmt("%.2f", t) + " s");
    return o;
}

// 3 ------------------------------------------------------------------------

Outcome puppet_occlusion_suite() {
    Outcome o;
    const auto t0 = Clock::now();
    SceneConfig sc;
    sc.n_frames = 240;
    auto occlude = [&](int first, int last, JointId j) {
        OcclusionEvent e;
        e.first = first;
        e.last = last;
        e.anchored = true;
        e.joints = {j};
        e.w = e.h = 30;
        e.color = {120, 120, 120};
        sc.occlusions.push_back(e);
    };
    occlude(20, 39, JointId::Head);
    occlude(70, 89, JointId::LShoulder);
    occlude(120, 139, JointId::RElbow);
    occlude(170, 189, JointId::LElbow);
    occlude(210, 229, JointId::RShoulder);
    const auto v = generate_video(sc, 31);
    PipelineConfig cfg;

    // Even frames train, odd frames test. Training labels are visible ground truth.
    AnnotationSet train;
    for (int t = 0; t < sc.n_frames; t += 2)
        for (JointId j : kAllJoints)
            if (!v.truth.occluded(t, j)) train.insert(make_initial(t, j, *v.truth.at(t, j).pos));
    const auto puppet = train_puppet(train, v.frames, cfg, 5);
    const auto occ = train_occlusion_detector(train, v.frames, cfg, 6);

    int pass = 0, limbs = 0, swap_fail = 0, swaps = 0;
    for (int t = 1; t < sc.n_frames; t += 2)
        for (ArmSide s : {ArmSide::Left, ArmSide::Right}) {
            if (v.truth.occluded(t, elbow_of(s)) || v.truth.occluded(t, wrist_of(s))) continue;
            const Point2 e = *v.truth.at(t, elbow_of(s)).pos, w = *v.truth.at(t, wrist_of(s)).pos;
            const Point2 other = *v.truth.at(t, wrist_of(opposite(s))).pos;
            pass += evaluate_lower_arm(puppet, v.frames[t], s, e, w) == LimbVerdict::Pass;
            ++limbs;
            if (distance(other, w) < 15) continue;  // hands together: not a swap
            swap_fail += evaluate_lower_arm(puppet, v.frames[t], s, e, other) == LimbVerdict::Fail;
            ++swaps;
        }
    const double pr = double(pass) / std::max(1, limbs), sf = double(swap_fail) / std::max(1, swaps);
    o.check(pr >= 0.95, "true-limb pass " + fmt("%.3f", pr) + " (n=" + std::to_string(limbs) + ")");
    o.check(sf >= 0.90, "hand-swap fail " + fmt("%.3f", sf) + " (n=" + std::to_string(swaps) + ")");

    int tp = 0, pos = 0, fp = 0, neg = 0;
    for (int t = 1; t < sc.n_frames; t += 2)
        for (JointId j : kOcclusionJoints) {
            const bool flagged = detect_occlusion(occ, v.frames[t], j, *v.truth.at(t, j).pos) == Visibility::Occluded;
            if (v.truth.occluded(t, j)) {
                tp += flagged;
                ++pos;
            } else {
                fp += flagged;
                ++neg;
            }
        }
    const double recall = double(tp) / std::max(1, pos), fpr = double(fp) / std::max(1, neg);
    o.check(recall >= 0.9 && fpr <= 0.1,
            "occlusion recall " + fmt("%.3f", recall) + " at FPR " + fmt("%.3f", fpr) + " (pos " + std::to_string(pos) + ")");
    const double t = secs(t0);
    o.check(t < 120, "runtime " + fmt("%.1f", t) + " s");
    return o;
}

// 4, 5 -----------------------------------------------------------------------

struct SceneRun {
    std::vector<IterationReport> reports;  // accuracy at d = 10
    double initial_only = 0, final_detector = 0;  // predict_all average at the default d
    double seconds = 0;
};

SceneRun run_default_scene(std::uint64_t seed) {
    const auto t0 = Clock::now();
    const auto v = generate_video(SceneConfig{}, seed);
    const auto init = simulate_initializer(v.truth, 0.05, 2.0, 0.02, seed);
    PipelineConfig cfg;
    cfg.iterations = 3;
    cfg.accuracy_d = 10;
    cfg.rng_seed = seed;
    const auto r = run(cfg, v.frames, init, &v.truth);
    SceneRun out;
    out.reports = r.reports;
    out.seconds = secs(t0);
    const double d = PipelineConfig{}.accuracy_d;
    const auto first = personalize(init, v.frames, cfg, stage_seed(seed, Stage::Detector, 0));
    out.initial_only = evaluate_accuracy(predict_all(first, v.frames), v.truth, d).average;
    out.final_detector = evaluate_accuracy(predict_all(r.detector, v.frames), v.truth, d).average;
    return out;
}

double wrist_mean(const IterationReport& r, const std::function<double(const JointIterationStats&)>& f) {
    return 0.5 * (f(r.joints[index_of(JointId::LWrist)]) + f(r.joints[index_of(JointId::RWrist)]));
}

Outcome trend_check(const SceneRun& s) {
    Outcome o;
    auto cov = [](const JointIterationStats& j) { return 100 * j.coverage; };
    auto acc = [](const JointIterationStats& j) { return j.accuracy.value_or(0); };
    std::string cs, as;
    bool mono = true;
    for (std::size_t k = 0; k < s.reports.size(); ++k) {
        const double c = wrist_mean(s.reports[k], cov), a = wrist_mean(s.reports[k], acc);
        cs += (k ? " " : "") + fmt("%.1f", c);
        as += (k ? " " : "") + fmt("%.1f", a);
        if (k > 0) mono = mono && c >= wrist_mean(s.reports[k - 1], cov) && a >= wrist_mean(s.reports[k - 1], acc);
    }
    o.check(mono, "wrist coverage [" + cs + "] and accuracy@10 [" + as + "] non-decreasing");
    const double c0 = wrist_mean(s.reports.front(), cov), c3 = wrist_mean(s.reports.back(), cov);
    o.check(c3 >= 70 && c3 - c0 >= 40, "final wrist coverage " + fmt("%.1f", c3) + " (+" + fmt("%.1f", c3 - c0) + ")");
    const auto& last = s.reports.back();
    const double ls = cov(last.joints[index_of(JointId::LShoulder)]), rs = cov(last.joints[index_of(JointId::RShoulder)]);
    o.check(ls >= 95 && rs >= 95, "shoulder coverage " + fmt("%.1f", ls) + " / " + fmt("%.1f", rs));
    o.check(s.seconds < 600, "runtime " + fmt("%.0f", s.seconds) + " s");
    return o;
}

// 6 ------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism_check(const std::string& cli, const fs::path& work) {
    Outcome o;
    if (cli.empty() || !fs::exists(cli)) {
        o.check(false, "command-line tool not found");
        return o;
    }
    fs::remove_all(work);
    fs::create_directories(work);
    {
        std::ofstream cfg(work / "scene.toml");
        cfg << "clusters_per_joint = 40\n[scene]\nn_frames = 60\n";
    }
    auto sh = [&](const std::string& args) {
        const std::string cmd = "\"" + cli + "\" " + args + " > \"" + (work / "log.txt").string() + "\" 2>&1";
        return std::system(cmd.c_str());
    };
    const std::string w = "\"" + work.string() + "\"";
    if (sh("synth --config " + w + "/scene.toml --out " + w + "/data --seed 9 --initial-coverage 0.1") != 0) {
        o.check(false, "synth failed");
        return o;
    }
    for (int threads : {1, 4}) {
        const std::string out = w + "/run" + std::to_string(threads);
        if (sh("run --frames " + w + "/data/frames --initial " + w + "/data/initial.jsonl --config " + w +
               "/scene.toml --iterations 2 --seed 9 --quiet --threads " + std::to_string(threads) + " --out " + out) != 0) {
            o.check(false, "run failed with --threads " + std::to_string(threads));
            return o;
        }
    }
    for (const char* f : {"annotations.jsonl", "predictions.jsonl"}) {
        const std::string a = slurp(work / "run1" / f), b = slurp(work / "run4" / f);
        o.check(!a.empty() && a == b, std::string(f) + (a == b ? " identical" : " differ"));
    }
    fs::remove_all(work);
    return o;
}

// 7 ------------------------------------------------------------------------

Outcome learner_oracles() {
    Outcome o;
    double worst = 1;
    for (std::uint64_t s = 1; s <= 10; ++s) {
        std::mt19937_64 rng(s);
        std::normal_distribution<double> g(0.0, 0.35);
        std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi);
        const double t = ang(rng);
        const Point2 dir{std::cos(t), std::sin(t)};
        std::vector<std::vector<double>> pos, neg;
        while (pos.size() < 12) {
            const Point2 p = dir * 1.2 + Point2{g(rng), g(rng)};
            if (p.x * dir.x + p.y * dir.y > 0.3) pos.push_back({p.x, p.y});
        }
        while (neg.size() < 12) {
            const Point2 p = dir * -1.2 + Point2{g(rng), g(rng)};
            if (p.x * dir.x + p.y * dir.y < -0.3) neg.push_back({p.x, p.y});
        }
        SvmParams p;
        p.c = 1e4;
        p.epochs = 4000;
        p.tolerance = 1e-7;
        p.bias_scale = 10.0;
        p.seed = s;
        const double best = oracle::grid_max_margin(pos, neg);
        worst = std::min(worst, oracle::svm_margin(train_svm(pos, neg, p), pos, neg) / best);
    }
    o.check(worst >= 0.9, "SVM margin >= " + fmt("%.3f", worst) + " of grid max");

    std::mt19937_64 rng(5);
    std::normal_distribution<float> g(0.0f, 0.04f);
    std::vector<ForestSample> samples;
    for (int i = 0; i < 200; ++i) {
        const bool fg = i % 2 == 0;
        ForestSample s;
        s.features = fg ? std::vector<float>{0.85f + g(rng), 0.2f + g(rng), 0.2f + g(rng)}
                        : std::vector<float>{0.3f + g(rng), 0.6f + g(rng), 0.35f + g(rng)};
        s.label = fg ? int(index_of(JointId::LWrist)) : kBackgroundClass;
        samples.push_back(s);
    }
    const auto f = train_forest(samples, ForestParams{}, 11, MultiWindowLayout(std::vector<WindowSpec>{{3, 1}}));
    int correct = 0;
    for (const auto& s : samples) correct += f.classify(s.features) == s.label;
    o.check(correct == 200, "forest training accuracy " + std::to_string(correct) + "/200");

    int match = 0;
    for (std::uint64_t s = 1; s <= 8; ++s) {
        std::mt19937_64 r(s);
        std::normal_distribution<float> n(0.0f, 0.5f);
        std::vector<std::vector<float>> pts;
        for (int i = 0; i < 11; ++i) pts.push_back({(i < 5 ? 0.0f : 6.0f) + n(r), n(r)});
        const auto ref = oracle::brute_force_two_means(pts);
        std::vector<std::size_t> expected;
        for (int c = 0; c < 2; ++c) {
            std::vector<std::size_t> mem;
            for (std::size_t i = 0; i < pts.size(); ++i)
                if (ref[i] == c) mem.push_back(i);
            expected.push_back(oracle::brute_force_medoid(pts, mem));
        }
        auto got = kmeans(pts, 2, s).medoids;
        std::sort(got.begin(), got.end());
        std::sort(expected.begin(), expected.end());
        match += got == expected;
    }
    o.check(match == 8, "k-means medoids " + std::to_string(match) + "/8");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    std::string cli = VIDPOSE_CLI_PATH;
    fs::path work = fs::temp_directory_path() / "vidpose_acceptance";
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string tok;
            while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
        } else if (a == "--cli" && i + 1 < argc) {
            cli = argv[++i];
        } else if (a == "--work" && i + 1 < argc) {
            work = argv[++i];
        } else {
            std::cerr << "usage: acceptance [--only N[,N...]] [--cli PATH] [--work DIR]\n";
            return 2;
        }
    }
    auto wanted = [&](int k) { return only.empty() || only.count(k) != 0; };

    int failures = 0;
    auto report = [&](int k, const char* name, const Outcome& o) {
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << k << "  " << name << ": " << o.detail << std::endl;
        failures += !o.pass;
    };

    // Timed criteria run single-threaded.
    set_thread_limit(1);
    if (wanted(1)) report(1, "optical flow", flow_suite());
    if (wanted(2)) report(2, "consensus", consensus_suite());
    if (wanted(3)) report(3, "puppet and occlusion", puppet_occlusion_suite());

    if (wanted(4) || wanted(5)) {
        const SceneRun first = run_default_scene(1);
        if (wanted(4)) report(4, "coverage and accuracy trend", trend_check(first));
        if (wanted(5)) {
            Outcome o;
            std::vector<SceneRun> runs{first};
            for (std::uint64_t s : {2u, 3u}) runs.push_back(run_default_scene(s));
            for (std::size_t k = 0; k < runs.size(); ++k) {
                const double gain = runs[k].final_detector - runs[k].initial_only;
                o.check(gain >= 10, "seed " + std::to_string(k + 1) + ": " + fmt("%.1f", runs[k].initial_only) + " -> " +
                                        fmt("%.1f", runs[k].final_detector) + " (+" + fmt("%.1f", gain) + ")");
            }
            report(5, "personalization gain", o);
        }
    }
    set_thread_limit(0);
    if (wanted(6)) report(6, "determinism across thread counts", determinism_check(cli, work));
    if (wanted(7)) report(7, "learner oracles", learner_oracles());
    return failures == 0 ? 0 : 1;
}
