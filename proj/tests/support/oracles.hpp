#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "vidpose/core/annotation.hpp"
#include "vidpose/core/image.hpp"
#include "vidpose/learners/svm.hpp"

namespace oracle {

using vidpose::Point2;

/// Smooth aperiodic texture in [0, 255] (roughly).
inline double texture(double x, double y) {
    return 128 + 45 * std::sin(0.31 * x + 0.17 * y) + 35 * std::sin(0.23 * y - 0.11 * x + 1.0) +
           25 * std::sin(0.53 * x + 0.41 * y + 2.0) + 15 * std::cos(0.07 * x - 0.29 * y);
}

/// Texture shifted by s: content at x appears at x + s.
inline vidpose::RgbImage textured_frame(int w, int h, Point2 s = {0, 0}) {
    vidpose::RgbImage img(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double v = std::clamp(texture(x - s.x, y - s.y), 0.0, 255.0);
            img.at(x, y, 0) = std::uint8_t(std::lround(v));
            img.at(x, y, 1) = std::uint8_t(std::lround(255.0 - v));
            img.at(x, y, 2) = std::uint8_t(std::lround(0.5 * v + 40));
        }
    return img;
}

/// Largest hard margin over unit directions on a 0.05-degree grid, with the
/// offset placed midway between the classes.
inline double grid_max_margin(const std::vector<std::vector<double>>& pos, const std::vector<std::vector<double>>& neg) {
    double best = -std::numeric_limits<double>::infinity();
    const int steps = 7200;
    for (int k = 0; k < steps; ++k) {
        const double t = 2 * std::numbers::pi * k / steps;
        const double wx = std::cos(t), wy = std::sin(t);
        double min_pos = std::numeric_limits<double>::infinity(), max_neg = -std::numeric_limits<double>::infinity();
        for (const auto& p : pos) min_pos = std::min(min_pos, wx * p[0] + wy * p[1]);
        for (const auto& n : neg) max_neg = std::max(max_neg, wx * n[0] + wy * n[1]);
        best = std::max(best, 0.5 * (min_pos - max_neg));
    }
    return best;
}

/// Geometric margin of a trained linear classifier on the data.
inline double svm_margin(const vidpose::LinearSvm& s, const std::vector<std::vector<double>>& pos,
                         const std::vector<std::vector<double>>& neg) {
    const double n = std::hypot(s.w[0], s.w[1]);
    double m = std::numeric_limits<double>::infinity();
    for (const auto& p : pos) m = std::min(m, s.score(p) / n);
    for (const auto& q : neg) m = std::min(m, -s.score(q) / n);
    return m;
}

/// Minimum within-cluster sum of squares over every two-way split (points[0] fixed in cluster 0).
inline std::vector<int> brute_force_two_means(const std::vector<std::vector<float>>& pts) {
    const std::size_t n = pts.size();
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_assign;
    for (std::uint32_t mask = 0; mask < (1u << (n - 1)); ++mask) {
        std::vector<int> a(n, 0);
        for (std::size_t i = 1; i < n; ++i) a[i] = (mask >> (i - 1)) & 1u;
        if (std::count(a.begin(), a.end(), 1) == 0) continue;
        double sse = 0;
        for (int c = 0; c < 2; ++c) {
            std::vector<double> mean(pts[0].size(), 0.0);
            int cnt = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (a[i] == c) {
                    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += pts[i][d];
                    ++cnt;
                }
            for (auto& m : mean) m /= cnt;
            for (std::size_t i = 0; i < n; ++i)
                if (a[i] == c)
                    for (std::size_t d = 0; d < mean.size(); ++d) sse += (pts[i][d] - mean[d]) * (pts[i][d] - mean[d]);
        }
        if (sse < best) {
            best = sse;
            best_assign = a;
        }
    }
    return best_assign;
}

/// Member minimising summed Euclidean distance to the others (lowest index on ties).
inline std::size_t brute_force_medoid(const std::vector<std::vector<float>>& pts, const std::vector<std::size_t>& members) {
    std::size_t best = members.front();
    double best_s = std::numeric_limits<double>::infinity();
    for (auto a : members) {
        double s = 0;
        for (auto b : members) {
            double d = 0;
            for (std::size_t k = 0; k < pts[a].size(); ++k) d += (pts[a][k] - pts[b][k]) * (pts[a][k] - pts[b][k]);
            s += std::sqrt(d);
        }
        if (s < best_s) {
            best_s = s;
            best = a;
        }
    }
    return best;
}

/// Argmax of the Gaussian kernel density over a 1-px grid covering the candidates.
inline Point2 parzen_grid_argmax(const std::vector<Point2>& cands, double sigma) {
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    for (const auto& c : cands) {
        x0 = std::min(x0, c.x);
        y0 = std::min(y0, c.y);
        x1 = std::max(x1, c.x);
        y1 = std::max(y1, c.y);
    }
    Point2 best{};
    double best_v = -1;
    for (double y = std::floor(y0); y <= std::ceil(y1); y += 1.0)
        for (double x = std::floor(x0); x <= std::ceil(x1); x += 1.0) {
            double v = 0;
            for (const auto& c : cands) v += std::exp(-((x - c.x) * (x - c.x) + (y - c.y) * (y - c.y)) / (2 * sigma * sigma));
            if (v > best_v) {
                best_v = v;
                best = {x, y};
            }
        }
    return best;
}

}  // namespace oracle
