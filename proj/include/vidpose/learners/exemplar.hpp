#pragma once

// Exemplar SVMs: one HOG classifier per cluster medoid, trained with the
// medoid as the only positive. Scores are calibrated into z-units against
// negatives the SVM never saw (the odd-indexed half of the pool).

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "vidpose/core/annotation.hpp"
#include "vidpose/core/errors.hpp"
#include "vidpose/imageproc/hog.hpp"
#include "vidpose/learners/svm.hpp"

namespace vidpose {

inline constexpr std::size_t kMinExemplarNegatives = 50;
inline constexpr double kSigmaFloor = 1e-6;

struct ExemplarModel {
    LinearSvm svm;
    double mu_neg = 0.0;
    double sigma_neg = kSigmaFloor;

    double z(const std::vector<float>& hog_features) const { return (svm.score(hog_features) - mu_neg) / sigma_neg; }
};

struct ExemplarParams {
    double c = 1.0;
    int epochs = 100;
    std::uint64_t seed = 0;
};

/// Trains on precomputed HOG vectors. Even-indexed negatives train, odd-indexed calibrate.
inline ExemplarModel train_exemplar(const std::vector<float>& positive, const std::vector<std::vector<float>>& negatives,
                                    const ExemplarParams& p = {}) {
    if (negatives.size() < kMinExemplarNegatives)
        throw TrainingError("train_exemplar: need at least " + std::to_string(kMinExemplarNegatives) + " negatives");
    std::vector<std::vector<float>> train, held;
    for (std::size_t i = 0; i < negatives.size(); ++i) (i % 2 == 0 ? train : held).push_back(negatives[i]);
    SvmParams sp;
    sp.c = p.c;
    sp.positive_weight = double(train.size());
    sp.epochs = p.epochs;
    sp.seed = p.seed;
    sp.space = FeatureSpace::Hog;
    ExemplarModel m;
    m.svm = train_svm(std::vector<std::vector<float>>{positive}, train, sp);
    double mean = 0;
    std::vector<double> s;
    s.reserve(held.size());
    for (const auto& x : held) s.push_back(m.svm.score(x));
    for (double v : s) mean += v;
    mean /= double(s.size());
    double var = 0;
    for (double v : s) var += (v - mean) * (v - mean);
    m.mu_neg = mean;
    m.sigma_neg = std::max(kSigmaFloor, std::sqrt(var / double(s.size())));
    return m;
}

inline ExemplarModel train_exemplar(const Patch& medoid, const std::vector<Patch>& negatives, const ExemplarParams& p = {}) {
    if (negatives.size() < kMinExemplarNegatives)
        throw TrainingError("train_exemplar: need at least " + std::to_string(kMinExemplarNegatives) + " negatives");
    std::vector<std::vector<float>> neg;
    neg.reserve(negatives.size());
    for (const auto& n : negatives) neg.push_back(hog(n).values);
    return train_exemplar(hog(medoid).values, neg, p);
}

struct Exemplar {
    Patch medoid;                  // verification window
    Patch context;                 // larger window used for registration
    ExemplarModel model;
    Annotation source;             // the annotation the medoid was cut around
};

struct ExemplarBank {
    std::array<std::vector<Exemplar>, kJointCount> per_joint;

    const std::vector<Exemplar>& at(JointId j) const { return per_joint[index_of(j)]; }
    std::vector<Exemplar>& at(JointId j) { return per_joint[index_of(j)]; }
    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& v : per_joint) n += v.size();
        return n;
    }
};

struct Significance {
    double z = -INFINITY;
    std::size_t index = 0;
};

inline Significance significance(const ExemplarBank& bank, JointId joint, const std::vector<float>& candidate_hog) {
    const auto& ex = bank.at(joint);
    if (ex.empty()) throw std::invalid_argument(std::string("significance: empty bank for ") + std::string(joint_name(joint)));
    Significance best;
    for (std::size_t i = 0; i < ex.size(); ++i) {
        const double z = ex[i].model.z(candidate_hog);
        if (z > best.z) best = {z, i};
    }
    return best;
}

inline Significance significance(const ExemplarBank& bank, JointId joint, const Patch& candidate) {
    if (bank.at(joint).empty()) throw std::invalid_argument(std::string("significance: empty bank for ") + std::string(joint_name(joint)));
    return significance(bank, joint, hog(candidate).values);
}

}  // namespace vidpose
