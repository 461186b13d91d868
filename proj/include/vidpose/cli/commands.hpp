#pragma once

// Command implementations behind the `vidpose` tool. Each returns a process
// exit code; errors are reported on `err`.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "vidpose/core/annotation_io.hpp"
#include "vidpose/core/config.hpp"
#include "vidpose/core/errors.hpp"
#include "vidpose/core/scale.hpp"
#include "vidpose/pipeline/pipeline.hpp"
#include "vidpose/pipeline/report.hpp"
#include "vidpose/synth/scene.hpp"
#include "vidpose/util/parallel.hpp"
#include "vidpose/util/png_io.hpp"

namespace vidpose::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kIo = 2, kParse = 3, kEmptyInput = 4, kEvalMismatch = 5 };

/// Thrown for empty frame directories or annotation files.
class EmptyInputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Maps exceptions from `fn` to exit codes.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kParse;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kParse;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "io error: " << e.what() << '\n';
        return kIo;
    } catch (const EmptyInputError& e) {
        err << "empty input: " << e.what() << '\n';
        return kEmptyInput;
    } catch (const PipelineError& e) {
        err << "pipeline error: " << e.what() << '\n';
        return std::string(e.what()) == "no seeds" ? kEmptyInput : kFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

namespace detail {

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create directory " + dir);
    // create_directories succeeds on an existing read-only directory; probe it.
    const auto probe = std::filesystem::path(dir) / ".vidpose_probe";
    {
        std::ofstream t(probe);
        if (!t) throw IoError("directory not writable: " + dir);
    }
    std::filesystem::remove(probe, ec);
}

inline std::string path_in(const std::string& dir, const char* name) { return (std::filesystem::path(dir) / name).string(); }

template <typename Fn>
void write_text(const std::string& path, Fn&& fn) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    fn(out);
    if (!out) throw IoError("write failed: " + path);
}

inline KvDocument load_doc(const std::optional<std::string>& path) {
    return path ? load_kv_file(*path) : KvDocument{};
}

}  // namespace detail

struct SynthOptions {
    std::optional<std::string> config;
    std::string out;
    std::uint64_t seed = 0;
    double initial_coverage = 0.05;
    double initial_noise = 2.0;
    double fp_rate = 0.02;
};

/// Writes frames/, ground_truth.jsonl, initial.jsonl and scene.toml under `out`.
inline int cmd_synth(const SynthOptions& o, std::ostream& log, std::ostream& err) {
    return guarded(err, [&] {
        const KvDocument doc = detail::load_doc(o.config);
        const SceneConfig sc = scene_from_kv(doc);
        (void)apply_kv(PipelineConfig{}, doc.root);  // the same file feeds run
        detail::ensure_dir(o.out);
        const SyntheticVideo v = generate_video(sc, o.seed);
        save_frames(detail::path_in(o.out, "frames"), v.frames);
        save_ground_truth(detail::path_in(o.out, "ground_truth.jsonl"), v.truth);
        save_annotations(detail::path_in(o.out, "initial.jsonl"),
                         simulate_initializer(v.truth, o.initial_coverage, o.initial_noise, o.fp_rate, o.seed));
        const std::string copy = detail::path_in(o.out, "scene.toml");
        if (o.config) {
            std::ifstream in(*o.config, std::ios::binary);
            detail::write_text(copy, [&](std::ostream& out) { out << in.rdbuf(); });
        } else {
            detail::write_text(copy, [](std::ostream& out) { out << "# built-in default scene\n"; });
        }
        log << "wrote " << v.frames.size() << " frames to " << o.out << '\n';
        return int(kOk);
    });
}

struct RunOptions {
    std::string frames;
    std::string initial;
    std::optional<std::string> config;
    std::string out;
    std::optional<std::string> gt;
    std::optional<std::uint64_t> seed;
    std::optional<int> iterations;
    std::optional<double> d;
    std::optional<int> threads;
    double scale = 1.0;  // used when the initial set has no frame with both shoulders
    bool quiet = false;
};

/// Output files, relative to the output directory.
inline constexpr const char* kAnnotationsFile = "annotations.jsonl";
inline constexpr const char* kPredictionsFile = "predictions.jsonl";
inline constexpr const char* kDetectorFile = "detector.bin";
inline constexpr const char* kReportCsvFile = "report.csv";
inline constexpr const char* kReportSvgFile = "report.svg";
inline constexpr const char* kAuditFile = "audit.jsonl";
inline constexpr const char* kTimingsFile = "timings.csv";

inline int cmd_run(const RunOptions& o, std::ostream& log, std::ostream& err) {
    return guarded(err, [&] {
        PipelineConfig cfg = apply_kv(PipelineConfig{}, detail::load_doc(o.config).root);
        if (o.seed) cfg.rng_seed = *o.seed;
        if (o.iterations) cfg.iterations = *o.iterations;
        if (o.d) cfg.accuracy_d = *o.d;
        if (o.threads) cfg.threads = *o.threads;
        cfg.validate();
        set_thread_limit(cfg.threads);

        FrameStore frames = load_frames(o.frames);
        if (frames.size() == 0) throw EmptyInputError("no PNG frames in " + o.frames);
        AnnotationSet initial = load_annotations(o.initial);
        if (initial.count_active() == 0) throw EmptyInputError("no active annotations in " + o.initial);
        std::optional<GroundTruth> gt;
        if (o.gt) gt = load_ground_truth(*o.gt, frames.size(), frames.frame_size());
        detail::ensure_dir(o.out);

        const double factor = choose_scale_factor(initial, o.scale);
        apply_scale(factor, frames, &initial, gt ? &*gt : nullptr);
        if (!o.quiet && factor != 1.0) log << "frames rescaled by " << factor << '\n';

        ProgressFn progress;
        if (!o.quiet) progress = [&](const std::string& m) { log << m << '\n'; };
        RunResult r = run(cfg, frames, initial, gt ? &*gt : nullptr, nullptr, progress);

        auto preds = r.predictions;
        unscale(factor, preds);
        save_annotations(detail::path_in(o.out, kAnnotationsFile), unscale(factor, r.annotations));
        save_predictions(detail::path_in(o.out, kPredictionsFile), preds);
        save_detector(detail::path_in(o.out, kDetectorFile), r.detector, factor);
        const auto rows = report_rows(r.reports);
        detail::write_text(detail::path_in(o.out, kReportCsvFile), [&](std::ostream& out) { write_report_csv(out, rows); });
        detail::write_text(detail::path_in(o.out, kReportSvgFile), [&](std::ostream& out) { write_report_svg(out, rows); });
        detail::write_text(detail::path_in(o.out, kAuditFile), [&](std::ostream& out) { write_audit(out, r.audit); });
        detail::write_text(detail::path_in(o.out, kTimingsFile), [&](std::ostream& out) { write_timings_csv(out, r.reports); });
        for (const auto& rep : r.reports)
            if (!rep.reconciles()) err << "warning: iteration " << rep.iteration << " counts do not reconcile\n";
        if (!o.quiet) log << "wrote results to " << o.out << '\n';
        return int(kOk);
    });
}

struct EvalOptions {
    std::string predictions;
    std::string gt;
    double d = 20.0;
    std::optional<std::string> csv;
};

inline int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto preds = load_predictions(o.predictions);
        const auto gt = load_ground_truth(o.gt);
        AccuracyReport acc;
        try {
            acc = evaluate_accuracy(preds, gt, o.d);
        } catch (const std::invalid_argument& e) {
            err << "evaluation mismatch: " << e.what() << '\n';
            return int(kEvalMismatch);
        }
        auto emit = [&](std::ostream& s, bool csv) {
            if (csv) s << "joint,accuracy,evaluated\n";
            for (JointId j : kAllJoints) {
                const auto& a = acc.per_joint[index_of(j)];
                if (csv)
                    s << joint_name(j) << ',' << (a ? vidpose::detail::fixed2(*a) : "") << ',' << acc.evaluated[index_of(j)] << '\n';
                else
                    s << joint_name(j) << ' ' << (a ? vidpose::detail::fixed2(*a) : "-") << '\n';
            }
            s << "average" << (csv ? ',' : ' ') << vidpose::detail::fixed2(acc.average) << (csv ? ",\n" : "\n");
        };
        emit(out, false);
        if (o.csv) detail::write_text(*o.csv, [&](std::ostream& s) { emit(s, true); });
        return int(kOk);
    });
}

struct ReportOptions {
    std::string csv;
    std::string out;
};

/// Re-renders the SVG chart from a report CSV.
inline int cmd_report(const ReportOptions& o, std::ostream& err) {
    return guarded(err, [&] {
        std::ifstream in(o.csv);
        if (!in) throw IoError("cannot open " + o.csv);
        const auto rows = read_report_csv(in, o.csv);
        detail::write_text(o.out, [&](std::ostream& s) { write_report_svg(s, rows); });
        return int(kOk);
    });
}

}  // namespace vidpose::cli
