#pragma once

// k-means over rgb_vector patch features with k-means++ seeding. Each
// cluster is represented by its medoid: the member with the smallest summed
// Euclidean distance to the other members.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "vidpose/imageproc/rgb.hpp"
#include "vidpose/util/rng.hpp"

namespace vidpose {

struct KMeansResult {
    std::vector<std::vector<float>> centroids;
    std::vector<int> assignment;    // cluster per point
    std::vector<std::size_t> medoids;  // point index per non-empty cluster, in cluster order
    int iterations = 0;
};

namespace detail {
inline double sq_dist(const std::vector<float>& a, const std::vector<float>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = double(a[i]) - b[i];
        s += d * d;
    }
    return s;
}

inline int nearest(const std::vector<std::vector<float>>& centroids, const std::vector<float>& x) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = sq_dist(centroids[c], x);
        if (d < best_d) {
            best_d = d;
            best = int(c);
        }
    }
    return best;
}
}  // namespace detail

/// Medoid of a subset: minimises summed Euclidean distance to the others; ties go to the lower index.
inline std::size_t medoid_of(const std::vector<std::vector<float>>& points, const std::vector<std::size_t>& members) {
    if (members.empty()) throw std::invalid_argument("medoid_of: empty member list");
    std::size_t best = members.front();
    double best_s = std::numeric_limits<double>::infinity();
    for (std::size_t a : members) {
        double s = 0;
        for (std::size_t b : members) s += std::sqrt(detail::sq_dist(points[a], points[b]));
        if (s < best_s) {
            best_s = s;
            best = a;
        }
    }
    return best;
}

inline KMeansResult kmeans(const std::vector<std::vector<float>>& points, int k, std::uint64_t seed, int max_iter = 50) {
    if (points.empty()) throw std::invalid_argument("kmeans: empty input");
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    const std::size_t n = points.size();
    KMeansResult r;
    r.assignment.assign(n, 0);
    if (std::size_t(k) >= n) {
        // Every point is its own cluster.
        r.centroids = points;
        std::iota(r.assignment.begin(), r.assignment.end(), 0);
        r.medoids.resize(n);
        std::iota(r.medoids.begin(), r.medoids.end(), std::size_t(0));
        return r;
    }

    Rng rng(seed);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    r.centroids.push_back(points[first(rng)]);
    while (int(r.centroids.size()) < k) {
        double total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], detail::sq_dist(points[i], r.centroids.back()));
            total += d2[i];
        }
        std::size_t pick = 0;
        if (total > 0) {
            double u = std::uniform_real_distribution<double>(0.0, total)(rng);
            for (pick = 0; pick + 1 < n; ++pick) {
                u -= d2[pick];
                if (u < 0 && d2[pick] > 0) break;
            }
        } else {
            pick = first(rng);  // all points coincide with centroids
        }
        r.centroids.push_back(points[pick]);
    }

    const std::size_t dim = points.front().size();
    for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
        bool changed = r.iterations == 0;
        for (std::size_t i = 0; i < n; ++i) {
            const int c = detail::nearest(r.centroids, points[i]);
            if (c != r.assignment[i]) changed = true;
            r.assignment[i] = c;
        }
        if (!changed) break;
        std::vector<std::vector<double>> sum(std::size_t(k), std::vector<double>(dim, 0.0));
        std::vector<std::size_t> count(std::size_t(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto& s = sum[std::size_t(r.assignment[i])];
            for (std::size_t d = 0; d < dim; ++d) s[d] += points[i][d];
            ++count[std::size_t(r.assignment[i])];
        }
        for (std::size_t c = 0; c < std::size_t(k); ++c) {
            if (count[c] == 0) continue;  // keep the old centroid
            for (std::size_t d = 0; d < dim; ++d) r.centroids[c][d] = float(sum[c][d] / double(count[c]));
        }
    }

    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i) members[std::size_t(r.assignment[i])].push_back(i);
    for (const auto& m : members)
        if (!m.empty()) r.medoids.push_back(medoid_of(points, m));
    return r;
}

/// Medoid patches of k-means clusters over rgb_vector features (k capped at the patch count).
inline std::vector<std::size_t> kmeans_medoid_indices(const std::vector<Patch>& patches, int k, std::uint64_t seed,
                                                      int downsample_to = 11) {
    if (patches.empty()) throw std::invalid_argument("kmeans_medoids: empty input");
    if (k < 1) throw std::invalid_argument("kmeans_medoids: k must be >= 1");
    std::vector<std::vector<float>> feats;
    feats.reserve(patches.size());
    for (const auto& p : patches) feats.push_back(rgb_vector(p, std::min(downsample_to, p.side)));
    return kmeans(feats, k, seed).medoids;
}

inline std::vector<Patch> kmeans_medoids(const std::vector<Patch>& patches, int k, std::uint64_t seed, int downsample_to = 11) {
    std::vector<Patch> out;
    for (std::size_t i : kmeans_medoid_indices(patches, k, seed, downsample_to)) out.push_back(patches[i]);
    return out;
}

}  // namespace vidpose
