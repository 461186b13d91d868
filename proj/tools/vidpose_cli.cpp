// vidpose: synth | run | eval | report

#include <CLI11.hpp>

#include <iostream>

#include "vidpose/cli/commands.hpp"

using namespace vidpose;

int main(int argc, char** argv) {
    CLI::App app{"Annotation propagation and personalized joint detection for single-person videos"};
    app.require_subcommand(1);

    cli::SynthOptions so;
    int synth_threads = 0;
    auto* synth = app.add_subcommand("synth", "render a synthetic video with ground truth and a simulated initial set");
    synth->add_option("--config", so.config, "scene config file");
    synth->add_option("--out", so.out, "output directory")->required();
    synth->add_option("--seed", so.seed, "random seed");
    synth->add_option("--threads", synth_threads, "worker threads (0: all cores)");
    synth->add_option("--initial-coverage", so.initial_coverage, "fraction of frames given initial annotations");
    synth->add_option("--initial-noise", so.initial_noise, "initial annotation noise, px");
    synth->add_option("--fp-rate", so.fp_rate, "fraction of initial annotations placed at random");

    cli::RunOptions ro;
    auto* run = app.add_subcommand("run", "propagate annotations and train the personalized detector");
    run->add_option("--frames", ro.frames, "directory of PNG frames")->required();
    run->add_option("--initial", ro.initial, "initial annotations (JSONL)")->required();
    run->add_option("--config", ro.config, "pipeline config file");
    run->add_option("--out", ro.out, "output directory")->required();
    run->add_option("--gt", ro.gt, "ground truth (JSONL) for accuracy columns");
    run->add_option("--seed", ro.seed, "random seed (overrides rng_seed)");
    run->add_option("--iterations", ro.iterations, "iterations (overrides the config)");
    run->add_option("--d", ro.d, "accuracy threshold, px (overrides accuracy_d)");
    run->add_option("--threads", ro.threads, "worker threads (0: all cores)");
    run->add_option("--scale", ro.scale, "scale factor when the initial set has no shoulder pair");
    run->add_flag("--quiet", ro.quiet, "no progress output");

    cli::EvalOptions eo;
    auto* eval = app.add_subcommand("eval", "accuracy of predictions against ground truth");
    eval->add_option("--pred", eo.predictions, "predictions (JSONL)")->required();
    eval->add_option("--gt", eo.gt, "ground truth (JSONL)")->required();
    eval->add_option("--d", eo.d, "distance threshold, px");
    eval->add_option("--out", eo.csv, "also write a CSV here");

    cli::ReportOptions po;
    auto* report = app.add_subcommand("report", "render the SVG chart from a report CSV");
    report->add_option("--csv", po.csv, "report CSV written by run")->required();
    report->add_option("--out", po.out, "SVG output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kParse;
    }

    if (synth->parsed()) {
        set_thread_limit(synth_threads);
        return cli::cmd_synth(so, std::cerr, std::cerr);
    }
    if (run->parsed()) return cli::cmd_run(ro, std::cerr, std::cerr);
    if (eval->parsed()) return cli::cmd_eval(eo, std::cout, std::cerr);
    return cli::cmd_report(po, std::cerr);
}
