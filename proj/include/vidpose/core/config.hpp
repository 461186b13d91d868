#pragma once

#include <cstdint>
#include <sstream>
#include <string>

#include "vidpose/core/errors.hpp"
#include "vidpose/core/kv_config.hpp"

namespace vidpose {

/// Random forest hyperparameters.
struct ForestParams {
    int n_trees = 12;
    int max_depth = 14;
    int min_leaf = 5;
    int features_per_split = 0;  // 0: sqrt(feature dimension)
};

struct PipelineConfig {
    // Evaluation and propagation thresholds.
    double accuracy_d = 20.0;        // px
    int temporal_window = 30;        // frames either side
    double agreement_std_max = 20.0; // px
    int min_source_frames = 3;
    int clusters_per_joint = 200;
    int correction_samples = 25;
    double significance_min = 3.0;   // z-units
    double parzen_sigma = 5.0;       // px
    int iterations = 5;
    std::uint64_t rng_seed = 0;

    // Spatial matching.
    double conf_min = 0.5;
    double nms_radius = 10.0;        // px
    int max_candidates_per_frame = 3;
    int detector_stride = 4;         // px
    int registration_radius = 12;    // px
    double registration_smoothness = 0.5;
    double registration_reject = 0.6;  // mean per-cell energy above which a registration is rejected
    int max_exemplar_negatives = 160;

    // Self-evaluation.
    double correction_radius = 10.0;  // px, std of endpoint perturbations
    int occlusion_window = 33;        // px, odd square window side
    int puppet_width = 24;            // px
    int min_puppet_pairs = 10;

    // Personalized detector.
    ForestParams forest;
    int forest_max_frames_per_joint = 300;
    int forest_background_per_frame = 10;

    bool enable_spatial = true;
    bool enable_temporal = true;
    bool exclude_occluded_gt = true;
    int threads = 0;  // 0: hardware concurrency

    void validate() const {
        auto positive = [](const char* field, double v) {
            if (!(v > 0)) throw ConfigError(field, "must be > 0");
        };
        auto at_least_one = [](const char* field, int v) {
            if (v < 1) throw ConfigError(field, "must be >= 1");
        };
        positive("accuracy_d", accuracy_d);
        positive("agreement_std_max", agreement_std_max);
        positive("parzen_sigma", parzen_sigma);
        positive("nms_radius", nms_radius);
        positive("correction_radius", correction_radius);
        positive("registration_reject", registration_reject);
        at_least_one("temporal_window", temporal_window);
        at_least_one("min_source_frames", min_source_frames);
        at_least_one("clusters_per_joint", clusters_per_joint);
        at_least_one("correction_samples", correction_samples);
        at_least_one("max_candidates_per_frame", max_candidates_per_frame);
        at_least_one("detector_stride", detector_stride);
        at_least_one("registration_radius", registration_radius);
        at_least_one("min_puppet_pairs", min_puppet_pairs);
        at_least_one("forest.n_trees", forest.n_trees);
        at_least_one("forest.max_depth", forest.max_depth);
        at_least_one("forest.min_leaf", forest.min_leaf);
        at_least_one("forest_max_frames_per_joint", forest_max_frames_per_joint);
        at_least_one("forest_background_per_frame", forest_background_per_frame);
        if (max_exemplar_negatives < 100) throw ConfigError("max_exemplar_negatives", "must be >= 100");
        if (iterations < 0) throw ConfigError("iterations", "must be >= 0");
        if (significance_min < 0) throw ConfigError("significance_min", "must be >= 0");
        if (conf_min < 0 || conf_min > 1) throw ConfigError("conf_min", "must lie in [0, 1]");
        if (occlusion_window < 9 || occlusion_window % 2 == 0 || (occlusion_window - 1) % 8 != 0)
            throw ConfigError("occlusion_window", "must be odd with (side - 1) divisible by 8");
        if (puppet_width < 8 || puppet_width % 8 != 0) throw ConfigError("puppet_width", "must be a positive multiple of 8");
        if (threads < 0) throw ConfigError("threads", "must be >= 0");
    }
};

/// Applies the keys present in `t` on top of `cfg`. Unknown keys are rejected.
inline PipelineConfig apply_kv(PipelineConfig cfg, const KvTable& t) {
    static const char* const known[] = {
        "accuracy_d", "temporal_window", "agreement_std_max", "min_source_frames", "clusters_per_joint",
        "correction_samples", "significance_min", "parzen_sigma", "iterations", "rng_seed", "conf_min",
        "nms_radius", "max_candidates_per_frame", "detector_stride", "registration_radius",
        "registration_smoothness", "registration_reject", "max_exemplar_negatives", "correction_radius",
        "occlusion_window", "puppet_width", "min_puppet_pairs", "forest.n_trees", "forest.max_depth",
        "forest.min_leaf", "forest.features_per_split", "forest_max_frames_per_joint",
        "forest_background_per_frame", "enable_spatial", "enable_temporal", "exclude_occluded_gt", "threads"};
    for (const auto& [k, v] : t.values()) {
        bool ok = false;
        for (const char* name : known) ok = ok || k == name;
        // Scene keys may share the file; they live under [scene].
        if (!ok && k.rfind("scene.", 0) != 0) throw ConfigError(k, "unknown configuration key");
    }
    cfg.accuracy_d = t.get_number("accuracy_d", cfg.accuracy_d);
    cfg.temporal_window = t.get_int("temporal_window", cfg.temporal_window);
    cfg.agreement_std_max = t.get_number("agreement_std_max", cfg.agreement_std_max);
    cfg.min_source_frames = t.get_int("min_source_frames", cfg.min_source_frames);
    cfg.clusters_per_joint = t.get_int("clusters_per_joint", cfg.clusters_per_joint);
    cfg.correction_samples = t.get_int("correction_samples", cfg.correction_samples);
    cfg.significance_min = t.get_number("significance_min", cfg.significance_min);
    cfg.parzen_sigma = t.get_number("parzen_sigma", cfg.parzen_sigma);
    cfg.iterations = t.get_int("iterations", cfg.iterations);
    cfg.rng_seed = static_cast<std::uint64_t>(t.get_number("rng_seed", double(cfg.rng_seed)));
    cfg.conf_min = t.get_number("conf_min", cfg.conf_min);
    cfg.nms_radius = t.get_number("nms_radius", cfg.nms_radius);
    cfg.max_candidates_per_frame = t.get_int("max_candidates_per_frame", cfg.max_candidates_per_frame);
    cfg.detector_stride = t.get_int("detector_stride", cfg.detector_stride);
    cfg.registration_radius = t.get_int("registration_radius", cfg.registration_radius);
    cfg.registration_smoothness = t.get_number("registration_smoothness", cfg.registration_smoothness);
    cfg.registration_reject = t.get_number("registration_reject", cfg.registration_reject);
    cfg.max_exemplar_negatives = t.get_int("max_exemplar_negatives", cfg.max_exemplar_negatives);
    cfg.correction_radius = t.get_number("correction_radius", cfg.correction_radius);
    cfg.occlusion_window = t.get_int("occlusion_window", cfg.occlusion_window);
    cfg.puppet_width = t.get_int("puppet_width", cfg.puppet_width);
    cfg.min_puppet_pairs = t.get_int("min_puppet_pairs", cfg.min_puppet_pairs);
    cfg.forest.n_trees = t.get_int("forest.n_trees", cfg.forest.n_trees);
    cfg.forest.max_depth = t.get_int("forest.max_depth", cfg.forest.max_depth);
    cfg.forest.min_leaf = t.get_int("forest.min_leaf", cfg.forest.min_leaf);
    cfg.forest.features_per_split = t.get_int("forest.features_per_split", cfg.forest.features_per_split);
    cfg.forest_max_frames_per_joint = t.get_int("forest_max_frames_per_joint", cfg.forest_max_frames_per_joint);
    cfg.forest_background_per_frame = t.get_int("forest_background_per_frame", cfg.forest_background_per_frame);
    cfg.enable_spatial = t.get_bool("enable_spatial", cfg.enable_spatial);
    cfg.enable_temporal = t.get_bool("enable_temporal", cfg.enable_temporal);
    cfg.exclude_occluded_gt = t.get_bool("exclude_occluded_gt", cfg.exclude_occluded_gt);
    cfg.threads = t.get_int("threads", cfg.threads);
    cfg.validate();
    return cfg;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
    return apply_kv(PipelineConfig{}, load_kv_file(path).root);
}

}  // namespace vidpose
