#pragma once

// Multi-class random forest over multi-window RGB features.
//
// Class indices 0..6 are the joints, 7 is background. Trees are grown on
// bootstrap resamples with sqrt(d) candidate features per node and Gini
// splits at midpoints between sorted feature values.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "vidpose/core/config.hpp"
#include "vidpose/core/errors.hpp"
#include "vidpose/core/types.hpp"
#include "vidpose/imageproc/multiwindow.hpp"
#include "vidpose/util/parallel.hpp"
#include "vidpose/util/rng.hpp"

namespace vidpose {

inline constexpr int kBackgroundClass = kJointCount;
inline constexpr int kForestClasses = kJointCount + 1;

struct ForestSample {
    std::vector<float> features;
    int label = kBackgroundClass;  // joint index or kBackgroundClass
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    float threshold = 0.0f;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t leaf = -1;  // row in the leaf table
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;
    std::vector<double> leaf_probs;  // [leaf][class]

    /// Leaf row for a sample whose i-th feature is get(i).
    template <typename Get>
    const double* classify(Get&& get) const {
        std::size_t n = 0;
        while (nodes[n].feature >= 0) n = std::size_t(get(nodes[n].feature) <= nodes[n].threshold ? nodes[n].left : nodes[n].right);
        return &leaf_probs[std::size_t(nodes[n].leaf) * kForestClasses];
    }
    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct RandomForest {
    MultiWindowLayout layout;
    int dim = 0;
    std::vector<DecisionTree> trees;
    std::array<bool, kForestClasses> present{};  // labels seen in training

    bool trained_for(JointId j) const { return present[std::size_t(index_of(j))]; }
    friend bool operator==(const RandomForest&, const RandomForest&) = default;

    template <typename Get>
    std::array<double, kForestClasses> predict_with(Get&& get) const {
        std::array<double, kForestClasses> p{};
        for (const auto& t : trees) {
            const double* leaf = t.classify(get);
            for (int c = 0; c < kForestClasses; ++c) p[std::size_t(c)] += leaf[c];
        }
        for (double& v : p) v /= double(trees.size());
        return p;
    }

    std::array<double, kForestClasses> predict(const std::vector<float>& x) const {
        if (int(x.size()) != dim) throw std::invalid_argument("RandomForest::predict: feature dimension mismatch");
        return predict_with([&](int i) { return x[std::size_t(i)]; });
    }

    int classify(const std::vector<float>& x) const {
        const auto p = predict(x);
        return int(std::max_element(p.begin(), p.end()) - p.begin());
    }
};

namespace detail {

class TreeBuilder {
public:
    TreeBuilder(const std::vector<ForestSample>& s, const ForestParams& p, int mtry, Rng& rng)
        : samples_(s), params_(p), mtry_(mtry), rng_(rng), dim_(int(s.front().features.size())) {}

    DecisionTree build(std::vector<std::uint32_t> idx) {
        idx_ = std::move(idx);
        grow(0, idx_.size(), 0);
        return std::move(tree_);
    }

private:
    using Counts = std::array<double, kForestClasses>;

    static double gini(const Counts& c, double n) {
        if (n <= 0) return 0.0;
        double s = 1.0;
        for (double v : c) s -= (v / n) * (v / n);
        return s;
    }

    int make_leaf(std::size_t lo, std::size_t hi) {
        Counts c{};
        for (std::size_t i = lo; i < hi; ++i) c[std::size_t(samples_[idx_[i]].label)] += 1.0;
        const double n = double(hi - lo);
        const int leaf = int(tree_.leaf_probs.size() / kForestClasses);
        for (double v : c) tree_.leaf_probs.push_back(v / n);
        TreeNode node;
        node.leaf = leaf;
        tree_.nodes.push_back(node);
        return int(tree_.nodes.size()) - 1;
    }

    int grow(std::size_t lo, std::size_t hi, int depth) {
        const std::size_t n = hi - lo;
        const int min_leaf = std::max(1, params_.min_leaf);
        Counts total{};
        for (std::size_t i = lo; i < hi; ++i) total[std::size_t(samples_[idx_[i]].label)] += 1.0;
        const bool pure = std::count_if(total.begin(), total.end(), [](double v) { return v > 0; }) <= 1;
        if (pure || depth >= params_.max_depth || n < std::size_t(2 * min_leaf)) return make_leaf(lo, hi);

        const double parent = gini(total, double(n));
        double best_gain = 1e-12;
        int best_feature = -1;
        float best_threshold = 0.0f;

        // Sample mtry distinct features (partial Fisher-Yates).
        if (perm_.size() != std::size_t(dim_)) {
            perm_.resize(std::size_t(dim_));
            std::iota(perm_.begin(), perm_.end(), 0);
        }
        std::vector<std::pair<float, int>> vals(n);
        for (int k = 0; k < mtry_; ++k) {
            std::uniform_int_distribution<int> pick(k, dim_ - 1);
            std::swap(perm_[std::size_t(k)], perm_[std::size_t(pick(rng_))]);
            const int f = perm_[std::size_t(k)];
            for (std::size_t i = 0; i < n; ++i) {
                const auto& s = samples_[idx_[lo + i]];
                vals[i] = {s.features[std::size_t(f)], s.label};
            }
            std::sort(vals.begin(), vals.end());
            Counts left{};
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left[std::size_t(vals[i].second)] += 1.0;
                const std::size_t nl = i + 1, nr = n - nl;
                if (nl < std::size_t(min_leaf)) continue;
                if (nr < std::size_t(min_leaf)) break;
                if (vals[i].first == vals[i + 1].first) continue;
                Counts right{};
                for (int c = 0; c < kForestClasses; ++c) right[std::size_t(c)] = total[std::size_t(c)] - left[std::size_t(c)];
                const double gain = parent - (double(nl) * gini(left, double(nl)) + double(nr) * gini(right, double(nr))) / double(n);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = vals[i].first + 0.5f * (vals[i + 1].first - vals[i].first);
                    // Guard against the midpoint rounding onto the upper value.
                    if (!(best_threshold < vals[i + 1].first)) best_threshold = vals[i].first;
                }
            }
        }
        if (best_feature < 0) return make_leaf(lo, hi);

        const auto mid = std::partition(idx_.begin() + std::ptrdiff_t(lo), idx_.begin() + std::ptrdiff_t(hi), [&](std::uint32_t i) {
            return samples_[i].features[std::size_t(best_feature)] <= best_threshold;
        });
        const std::size_t split = std::size_t(mid - idx_.begin());
        const int self = int(tree_.nodes.size());
        tree_.nodes.push_back({best_feature, best_threshold, -1, -1, -1});
        const int l = grow(lo, split, depth + 1);
        const int r = grow(split, hi, depth + 1);
        tree_.nodes[std::size_t(self)].left = l;
        tree_.nodes[std::size_t(self)].right = r;
        return self;
    }

    const std::vector<ForestSample>& samples_;
    const ForestParams& params_;
    int mtry_;
    Rng& rng_;
    int dim_;
    std::vector<std::uint32_t> idx_;
    std::vector<int> perm_;
    DecisionTree tree_;
};

}  // namespace detail

/// Trains a forest. Each tree draws from its own derived seed, so trees are
/// independent of the thread count.
inline RandomForest train_forest(const std::vector<ForestSample>& samples, const ForestParams& params, std::uint64_t seed,
                                 const MultiWindowLayout& layout = MultiWindowLayout()) {
    if (samples.empty()) throw TrainingError("train_forest: no samples");
    if (params.n_trees < 1 || params.max_depth < 1) throw std::invalid_argument("train_forest: bad parameters");
    RandomForest f;
    f.layout = layout;
    f.dim = int(samples.front().features.size());
    if (f.dim == 0) throw TrainingError("train_forest: empty feature vectors");
    for (const auto& s : samples) {
        if (int(s.features.size()) != f.dim) throw TrainingError("train_forest: inconsistent feature dimensions");
        if (s.label < 0 || s.label >= kForestClasses) throw TrainingError("train_forest: label out of range");
        f.present[std::size_t(s.label)] = true;
    }
    if (!f.present[kBackgroundClass]) throw TrainingError("train_forest: background samples required");
    if (std::count(f.present.begin(), f.present.end(), true) < 2)
        throw TrainingError("train_forest: need at least one foreground label besides background");

    const int mtry = params.features_per_split > 0 ? std::min(params.features_per_split, f.dim)
                                                   : std::max(1, int(std::lround(std::sqrt(double(f.dim)))));
    f.trees.resize(std::size_t(params.n_trees));
    parallel_for(f.trees.size(), [&](std::size_t t) {
        Rng rng(derive_seed(seed, {t}));
        std::uniform_int_distribution<std::uint32_t> pick(0, std::uint32_t(samples.size() - 1));
        std::vector<std::uint32_t> boot(samples.size());
        for (auto& b : boot) b = pick(rng);
        detail::TreeBuilder builder(samples, params, mtry, rng);
        f.trees[t] = builder.build(std::move(boot));
    });
    return f;
}

/// Per-location class probability on a stride grid (x_i = i*stride, y_j = j*stride).
struct ConfidenceMap {
    int stride = 1;
    int grid_w = 0;
    int grid_h = 0;
    std::vector<float> values;

    float at(int i, int j) const { return values[std::size_t(j) * grid_w + i]; }
    Point2 location(int i, int j) const { return {double(i * stride), double(j * stride)}; }
};

namespace detail {
inline void check_stride(const RgbImage& frame, int stride) {
    if (stride < 1) throw std::invalid_argument("confidence map: stride must be >= 1");
    if (frame.width < 1 || frame.height < 1) throw std::invalid_argument("confidence map: empty frame");
}
inline int grid_extent(int size, int stride) { return (size - 1) / stride + 1; }
}  // namespace detail

/// All class maps in one pass: maps[c] for c in [0, kForestClasses).
inline std::vector<ConfidenceMap> forest_class_maps(const RandomForest& f, const RgbImage& frame, int stride,
                                                    const IntegralRgb* integral = nullptr) {
    detail::check_stride(frame, stride);
    std::optional<IntegralRgb> own;
    if (!integral) integral = &own.emplace(frame, f.layout.max_half() + 2);
    const int gw = detail::grid_extent(frame.width, stride), gh = detail::grid_extent(frame.height, stride);
    std::vector<ConfidenceMap> maps(kForestClasses, ConfidenceMap{stride, gw, gh, std::vector<float>(std::size_t(gw) * gh)});
    for (int j = 0; j < gh; ++j)
        for (int i = 0; i < gw; ++i) {
            const int cx = i * stride, cy = j * stride;
            const auto p = f.predict_with([&](int k) { return integral->feature(f.layout.feature(k), cx, cy); });
            for (int c = 0; c < kForestClasses; ++c) maps[std::size_t(c)].values[std::size_t(j) * gw + i] = float(p[std::size_t(c)]);
        }
    return maps;
}

inline ConfidenceMap forest_confidence_map(const RandomForest& f, const RgbImage& frame, JointId joint, int stride) {
    if (!f.trained_for(joint))
        throw std::invalid_argument(std::string("forest_confidence_map: forest not trained for ") + std::string(joint_name(joint)));
    return std::move(forest_class_maps(f, frame, stride)[std::size_t(index_of(joint))]);
}

/// Class probability of `joint` at one integer pixel.
inline double forest_probability(const RandomForest& f, const IntegralRgb& integral, JointId joint, int x, int y) {
    const auto p = f.predict_with([&](int k) { return integral.feature(f.layout.feature(k), x, y); });
    return p[std::size_t(index_of(joint))];
}

}  // namespace vidpose
