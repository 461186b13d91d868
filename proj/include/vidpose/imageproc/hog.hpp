#pragma once

// Histogram of oriented gradients.
//
// Gradients are taken at pixel corners with 2x2 differences, so a raster of
// w x h pixels yields (w-1) x (h-1) gradient samples that are symmetric about
// the centre pixel of an odd-sided patch. Cells tile the sample grid, so
// (w-1) and (h-1) must be multiples of the cell size. Orientations are
// unsigned and hard-binned; blocks are 2x2 cells (stride one cell) with
// L2-Hys normalisation.

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vidpose/imageproc/patch.hpp"

namespace vidpose {

inline constexpr int kHogCell = 8;
inline constexpr int kHogBins = 9;

struct GradientField {
    int width = 0;  // samples along x (= raster width - 1)
    int height = 0;
    std::vector<float> magnitude;
    std::vector<std::uint8_t> bin;

    float mag(int x, int y) const { return magnitude[std::size_t(y) * width + x]; }
    int bin_at(int x, int y) const { return bin[std::size_t(y) * width + x]; }
};

/// Corner gradients; for multi-channel input the channel with the largest magnitude wins.
inline GradientField corner_gradients(const FloatImage& img, int bins) {
    if (img.width < 2 || img.height < 2) throw std::invalid_argument("corner_gradients: raster too small");
    if (bins < 1) throw std::invalid_argument("corner_gradients: bins must be >= 1");
    GradientField g;
    g.width = img.width - 1;
    g.height = img.height - 1;
    g.magnitude.assign(std::size_t(g.width) * g.height, 0.0f);
    g.bin.assign(g.magnitude.size(), 0);
    const double bin_width = std::numbers::pi / bins;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            double best_gx = 0, best_gy = 0, best_m2 = -1;
            for (int c = 0; c < img.channels; ++c) {
                const double p00 = img.at(x, y, c), p10 = img.at(x + 1, y, c);
                const double p01 = img.at(x, y + 1, c), p11 = img.at(x + 1, y + 1, c);
                const double gx = 0.5 * ((p10 + p11) - (p00 + p01));
                const double gy = 0.5 * ((p01 + p11) - (p00 + p10));
                const double m2 = gx * gx + gy * gy;
                if (m2 > best_m2) {
                    best_m2 = m2;
                    best_gx = gx;
                    best_gy = gy;
                }
            }
            const std::size_t k = std::size_t(y) * g.width + x;
            g.magnitude[k] = float(std::sqrt(best_m2));
            if (best_m2 > 0) {
                double theta = std::atan2(best_gy, best_gx);
                if (theta < 0) theta += std::numbers::pi;
                if (theta >= std::numbers::pi) theta -= std::numbers::pi;
                g.bin[k] = std::uint8_t(std::min(bins - 1, int(theta / bin_width)));
            }
        }
    return g;
}

struct HogDescriptor {
    std::vector<float> values;
    int cell = kHogCell;
    int bins = kHogBins;
    int cells_x = 0;
    int cells_y = 0;
    std::string normalization = "L2-Hys/2x2";

    std::size_t size() const noexcept { return values.size(); }
    /// Block layout multiplier: each cell appears in up to four 2x2 blocks.
    static std::size_t expected_size(int cx, int cy, int bins) {
        return std::size_t(cx - 1) * std::size_t(cy - 1) * 4 * std::size_t(bins);
    }
};

inline void check_hog_geometry(int width, int height, int cell) {
    if (cell < 1) throw std::invalid_argument("hog: cell must be >= 1");
    if ((width - 1) % cell != 0 || (height - 1) % cell != 0 || width < 2 || height < 2)
        throw std::invalid_argument("hog: raster side minus one must be divisible by the cell size (got " +
                                    std::to_string(width) + "x" + std::to_string(height) + ", cell " +
                                    std::to_string(cell) + ")");
}

/// Un-normalised per-cell orientation histograms, laid out [cy][cx][bin].
inline std::vector<float> cell_histograms(const FloatImage& img, int cell, int bins, int* cells_x = nullptr,
                                          int* cells_y = nullptr) {
    check_hog_geometry(img.width, img.height, cell);
    const GradientField g = corner_gradients(img, bins);
    const int cx = g.width / cell, cy = g.height / cell;
    std::vector<float> hist(std::size_t(cx) * cy * bins, 0.0f);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            const std::size_t c = std::size_t(y / cell) * cx + std::size_t(x / cell);
            hist[c * bins + g.bin_at(x, y)] += g.mag(x, y);
        }
    if (cells_x) *cells_x = cx;
    if (cells_y) *cells_y = cy;
    return hist;
}

namespace detail {
inline void l2_hys(std::span<float> v, float clip = 0.2f, float eps = 1e-3f) {
    auto normalize = [&] {
        double s = 0;
        for (float x : v) s += double(x) * x;
        const double n = std::sqrt(s + double(eps) * eps);
        for (float& x : v) x = float(x / n);
    };
    normalize();
    for (float& x : v) x = std::min(x, clip);
    normalize();
}
}  // namespace detail

/// HOG over an arbitrary raster whose (side - 1) dimensions are multiples of `cell`
/// and that spans at least 2x2 cells.
inline HogDescriptor hog(const FloatImage& img, int cell = kHogCell, int bins = kHogBins) {
    HogDescriptor d;
    d.cell = cell;
    d.bins = bins;
    const auto hist = cell_histograms(img, cell, bins, &d.cells_x, &d.cells_y);
    if (d.cells_x < 2 || d.cells_y < 2) throw std::invalid_argument("hog: need at least 2x2 cells for block normalisation");
    d.values.reserve(HogDescriptor::expected_size(d.cells_x, d.cells_y, bins));
    for (int by = 0; by + 1 < d.cells_y; ++by)
        for (int bx = 0; bx + 1 < d.cells_x; ++bx) {
            const std::size_t start = d.values.size();
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const std::size_t c = std::size_t(by + dy) * d.cells_x + std::size_t(bx + dx);
                    for (int b = 0; b < bins; ++b) d.values.push_back(hist[c * bins + b]);
                }
            detail::l2_hys(std::span<float>(d.values).subspan(start));
        }
    return d;
}

inline HogDescriptor hog(const Patch& patch, int cell = kHogCell, int bins = kHogBins) {
    return hog(patch.pixels, cell, bins);
}

}  // namespace vidpose
