#pragma once

// L2-regularised hinge-loss linear SVM trained by dual coordinate descent
// (the LIBLINEAR L1-loss solver). The bias is learned as the weight of a
// constant augmented feature. Coordinates are visited in an order shuffled
// by a fixed seed, so training is bit-reproducible.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "vidpose/core/errors.hpp"
#include "vidpose/util/rng.hpp"

namespace vidpose {

enum class FeatureSpace : std::uint8_t { Generic, Hog, Rgb };

struct LinearSvm {
    std::vector<double> w;
    double b = 0.0;
    FeatureSpace space = FeatureSpace::Generic;
    bool degenerate = false;             // no separation between the class mean scores
    std::vector<double> objective_log;   // negated dual objective after each epoch (non-increasing)
    double primal_objective = 0.0;

    template <typename T>
    double score(std::span<const T> x) const {
        if (x.size() != w.size()) throw std::invalid_argument("LinearSvm::score: feature dimension mismatch");
        double s = b;
        for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * double(x[i]);
        return s;
    }
    double score(const std::vector<float>& x) const { return score(std::span<const float>(x)); }
    double score(const std::vector<double>& x) const { return score(std::span<const double>(x)); }
    bool decide(const std::vector<float>& x) const { return score(x) >= 0.0; }

    double norm() const {
        double s = 0;
        for (double v : w) s += v * v;
        return std::sqrt(s);
    }
};

struct SvmParams {
    double c = 1.0;                // penalty for negatives
    double positive_weight = 1.0;  // penalty multiplier for positives
    int epochs = 200;
    double tolerance = 1e-4;       // projected-gradient spread for early stop
    double bias_scale = 1.0;       // value of the augmented constant feature
    std::uint64_t seed = 0;
    FeatureSpace space = FeatureSpace::Generic;
};

template <typename T>
LinearSvm train_svm(const std::vector<std::vector<T>>& pos, const std::vector<std::vector<T>>& neg,
                    const SvmParams& p = {}) {
    if (pos.empty() || neg.empty()) throw TrainingError("train_svm: both classes need at least one sample");
    if (!(p.c > 0) || !(p.positive_weight > 0)) throw std::invalid_argument("train_svm: penalties must be > 0");
    const std::size_t d = pos.front().size();
    for (const auto* set : {&pos, &neg})
        for (const auto& x : *set)
            if (x.size() != d) throw TrainingError("train_svm: inconsistent feature dimensions");

    const std::size_t n = pos.size() + neg.size();
    const std::size_t da = d + 1;
    std::vector<double> X(n * da);
    std::vector<double> y(n), cap(n), q(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool is_pos = i < pos.size();
        const auto& src = is_pos ? pos[i] : neg[i - pos.size()];
        double* row = &X[i * da];
        for (std::size_t k = 0; k < d; ++k) row[k] = double(src[k]);
        row[d] = p.bias_scale;
        y[i] = is_pos ? 1.0 : -1.0;
        cap[i] = is_pos ? p.c * p.positive_weight : p.c;
        q[i] = std::inner_product(row, row + da, row, 0.0);
    }

    std::vector<double> w(da, 0.0), alpha(n, 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(p.seed);
    LinearSvm model;
    model.space = p.space;
    double alpha_sum = 0.0;
    for (int epoch = 0; epoch < p.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double pg_max = -INFINITY, pg_min = INFINITY;
        for (std::size_t i : order) {
            const double* row = &X[i * da];
            const double g = y[i] * std::inner_product(row, row + da, w.begin(), 0.0) - 1.0;
            double pg = g;
            if (alpha[i] <= 0.0)
                pg = std::min(g, 0.0);
            else if (alpha[i] >= cap[i])
                pg = std::max(g, 0.0);
            pg_max = std::max(pg_max, pg);
            pg_min = std::min(pg_min, pg);
            if (std::abs(pg) < 1e-12 || q[i] <= 0.0) continue;
            const double old = alpha[i];
            alpha[i] = std::clamp(old - g / q[i], 0.0, cap[i]);
            const double delta = (alpha[i] - old) * y[i];
            alpha_sum += alpha[i] - old;
            if (delta != 0.0)
                for (std::size_t k = 0; k < da; ++k) w[k] += delta * row[k];
        }
        const double wn = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
        const double obj = 0.5 * wn - alpha_sum;
        // Coordinate steps are exact line maximisations of the dual; guard against round-off.
        model.objective_log.push_back(model.objective_log.empty() ? obj : std::min(obj, model.objective_log.back()));
        if (pg_max - pg_min < p.tolerance) break;
    }

    model.w.assign(w.begin(), w.begin() + std::ptrdiff_t(d));
    model.b = w[d] * p.bias_scale;
    double primal = 0.5 * std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
    double mean_pos = 0, mean_neg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = &X[i * da];
        const double s = std::inner_product(row, row + da, w.begin(), 0.0);
        primal += cap[i] * std::max(0.0, 1.0 - y[i] * s);
        (y[i] > 0 ? mean_pos : mean_neg) += s;
    }
    mean_pos /= double(pos.size());
    mean_neg /= double(neg.size());
    model.primal_objective = primal;
    model.degenerate = mean_pos - mean_neg < 1e-6;
    return model;
}

}  // namespace vidpose
