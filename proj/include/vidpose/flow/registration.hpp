#pragma once

// Dense patch registration over HOG cells.
//
// Each source cell's orientation histogram is matched against destination
// histograms over the same cell window shifted by an integer displacement
// within the search radius. The field minimises
//     E = sum_c D(c, d_c) + lambda * sum_{c~c'} |d_c - d_c'|_1
// on the finest cell grid. Optimisation is coarse-to-fine over cell blocks
// (whole patch, then power-of-two blocks down to single cells) with
// iterated conditional modes; every level starts from the previous
// solution and only accepts strict improvements, so E never increases.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "vidpose/imageproc/hog.hpp"

namespace vidpose {

struct RegistrationParams {
    int search_radius = 12;
    double smoothness = 0.5;  // descriptor-distance units per px
    int cell = kHogCell;
    int bins = kHogBins;
    int max_sweeps = 8;
};

/// Per-cell integer displacement mapping source cells into the destination patch.
struct DisplacementField {
    int cells_x = 0;
    int cells_y = 0;
    int cell = kHogCell;
    int search_radius = 0;
    std::vector<Point2> disp;  // [cy][cx]
    double residual = 0.0;     // mean per-cell energy at the finest level
    std::vector<double> residual_per_level;

    Point2 at(int cx, int cy) const { return disp[std::size_t(cy) * cells_x + cx]; }

    /// Bilinear lookup between cell centres, for a position in patch pixel coordinates.
    Point2 displacement_at(Point2 p) const {
        auto coord = [&](double v, int n) {
            const double c = (v - cell / 2.0) / cell;  // cell-centre index space
            return std::clamp(c, 0.0, double(n - 1));
        };
        const double gx = coord(p.x, cells_x), gy = coord(p.y, cells_y);
        const int x0 = std::min(int(gx), cells_x - 1), y0 = std::min(int(gy), cells_y - 1);
        const int x1 = std::min(x0 + 1, cells_x - 1), y1 = std::min(y0 + 1, cells_y - 1);
        const double ax = gx - x0, ay = gy - y0;
        return (1 - ay) * ((1 - ax) * at(x0, y0) + ax * at(x1, y0)) + ay * ((1 - ax) * at(x0, y1) + ax * at(x1, y1));
    }
};

namespace detail {

/// Per-bin summed-area tables of gradient magnitude over a sample grid.
class BinIntegral {
public:
    BinIntegral(const GradientField& g, int bins) : w_(g.width), h_(g.height), bins_(bins) {
        t_.assign(std::size_t(w_ + 1) * (h_ + 1) * bins_, 0.0);
        for (int y = 0; y < h_; ++y)
            for (int x = 0; x < w_; ++x)
                for (int b = 0; b < bins_; ++b) {
                    const double v = g.bin_at(x, y) == b ? g.mag(x, y) : 0.0;
                    t_[idx(x + 1, y + 1, b)] = v + t_[idx(x, y + 1, b)] + t_[idx(x + 1, y, b)] - t_[idx(x, y, b)];
                }
    }

    /// Histogram of samples in [x0, x1) x [y0, y1), clipped to the grid.
    void hist(int x0, int y0, int x1, int y1, double* out) const {
        x0 = std::clamp(x0, 0, w_);
        x1 = std::clamp(x1, 0, w_);
        y0 = std::clamp(y0, 0, h_);
        y1 = std::clamp(y1, 0, h_);
        for (int b = 0; b < bins_; ++b)
            out[b] = (x1 <= x0 || y1 <= y0)
                         ? 0.0
                         : t_[idx(x1, y1, b)] - t_[idx(x0, y1, b)] - t_[idx(x1, y0, b)] + t_[idx(x0, y0, b)];
    }

private:
    std::size_t idx(int x, int y, int b) const { return (std::size_t(y) * (w_ + 1) + x) * bins_ + b; }
    int w_, h_, bins_;
    std::vector<double> t_;
};

inline void normalize_hist(double* h, int bins) {
    constexpr double kEps = 0.1;
    double s = 0;
    for (int b = 0; b < bins; ++b) s += h[b];
    for (int b = 0; b < bins; ++b) h[b] /= (s + kEps);
}

}  // namespace detail

inline DisplacementField register_patches(const Patch& src, const Patch& dst, const RegistrationParams& p = {}) {
    if (src.side != dst.side) throw std::invalid_argument("register_patches: patch sizes differ");
    if (p.search_radius < 0) throw std::invalid_argument("register_patches: negative search radius");
    check_hog_geometry(src.side, src.side, p.cell);
    const GradientField gs = corner_gradients(src.pixels, p.bins);
    const GradientField gd = corner_gradients(dst.pixels, p.bins);
    const detail::BinIntegral is(gs, p.bins), id(gd, p.bins);
    const int C = gs.width / p.cell;
    const int R = p.search_radius;
    const int B = p.bins;

    // Candidate displacements ordered by L1 length so ties prefer small motion.
    std::vector<Point2> labels;
    for (int dy = -R; dy <= R; ++dy)
        for (int dx = -R; dx <= R; ++dx) labels.push_back({double(dx), double(dy)});
    std::stable_sort(labels.begin(), labels.end(), [](Point2 a, Point2 b) {
        return std::abs(a.x) + std::abs(a.y) < std::abs(b.x) + std::abs(b.y);
    });
    const std::size_t L = labels.size();

    // Data cost table D[cell][label].
    const std::size_t ncell = std::size_t(C) * C;
    std::vector<double> D(ncell * L);
    std::vector<double> hs(static_cast<std::size_t>(B)), hd(static_cast<std::size_t>(B));
    for (int cy = 0; cy < C; ++cy)
        for (int cx = 0; cx < C; ++cx) {
            const int x0 = cx * p.cell, y0 = cy * p.cell;
            is.hist(x0, y0, x0 + p.cell, y0 + p.cell, hs.data());
            detail::normalize_hist(hs.data(), B);
            for (std::size_t l = 0; l < L; ++l) {
                const int dx = int(labels[l].x), dy = int(labels[l].y);
                id.hist(x0 + dx, y0 + dy, x0 + dx + p.cell, y0 + dy + p.cell, hd.data());
                detail::normalize_hist(hd.data(), B);
                double cost = 0;
                for (int b = 0; b < B; ++b) cost += std::abs(hs[std::size_t(b)] - hd[std::size_t(b)]);
                D[(std::size_t(cy) * C + cx) * L + l] = cost;
            }
        }

    std::vector<std::size_t> label(ncell, 0);  // index 0 is the zero displacement
    auto l1 = [&](std::size_t a, std::size_t b) {
        return std::abs(labels[a].x - labels[b].x) + std::abs(labels[a].y - labels[b].y);
    };
    auto energy = [&] {
        double e = 0;
        for (int cy = 0; cy < C; ++cy)
            for (int cx = 0; cx < C; ++cx) {
                const std::size_t c = std::size_t(cy) * C + cx;
                e += D[c * L + label[c]];
                if (cx + 1 < C) e += p.smoothness * l1(label[c], label[c + 1]);
                if (cy + 1 < C) e += p.smoothness * l1(label[c], label[c + C]);
            }
        return e;
    };

    DisplacementField out;
    out.cells_x = out.cells_y = C;
    out.cell = p.cell;
    out.search_radius = R;

    // Block sizes: whole grid, then powers of two down to single cells (nested tilings).
    std::vector<int> blocks{C};
    int pow2 = 1;
    while (pow2 * 2 < C) pow2 *= 2;
    for (; pow2 >= 1; pow2 /= 2)
        if (pow2 < C) blocks.push_back(pow2);
    for (int bsize : blocks) {
        const int nb = (C + bsize - 1) / bsize;
        for (int sweep = 0; sweep < p.max_sweeps; ++sweep) {
            bool changed = false;
            for (int by = 0; by < nb; ++by)
                for (int bx = 0; bx < nb; ++bx) {
                    std::vector<std::size_t> members;
                    for (int cy = by * bsize; cy < std::min(C, (by + 1) * bsize); ++cy)
                        for (int cx = bx * bsize; cx < std::min(C, (bx + 1) * bsize); ++cx)
                            members.push_back(std::size_t(cy) * C + cx);
                    auto in_block = [&](int cx, int cy) {
                        return cx / bsize == bx && cy / bsize == by;
                    };
                    auto local = [&](std::size_t l) {
                        double e = 0;
                        for (std::size_t c : members) {
                            e += D[c * L + l];
                            const int cx = int(c % C), cy = int(c / C);
                            const int nx[4] = {cx - 1, cx + 1, cx, cx};
                            const int ny[4] = {cy, cy, cy - 1, cy + 1};
                            for (int k = 0; k < 4; ++k) {
                                if (nx[k] < 0 || ny[k] < 0 || nx[k] >= C || ny[k] >= C || in_block(nx[k], ny[k])) continue;
                                e += p.smoothness * l1(l, label[std::size_t(ny[k]) * C + nx[k]]);
                            }
                        }
                        return e;
                    };
                    // Blocks are nested, so every block is uniform when visited.
                    const std::size_t current = label[members.front()];
                    double best_e = local(current);
                    std::size_t best = current;
                    for (std::size_t l = 0; l < L; ++l) {
                        const double e = local(l);
                        if (e < best_e - 1e-12) {
                            best_e = e;
                            best = l;
                        }
                    }
                    if (best != current) {
                        for (std::size_t c : members) label[c] = best;
                        changed = true;
                    }
                }
            if (!changed) break;
        }
        out.residual_per_level.push_back(energy() / double(ncell));
    }
    out.disp.resize(ncell);
    for (std::size_t c = 0; c < ncell; ++c) out.disp[c] = labels[label[c]];
    out.residual = out.residual_per_level.back();
    return out;
}

}  // namespace vidpose
