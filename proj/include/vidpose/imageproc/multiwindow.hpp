#pragma once

// Multi-window RGB features for the patch forest.
//
// A sample centred on an integer pixel is described by the concatenated
// rgb_vector of several concentric square windows. The frame-side path reads
// the same numbers from a padded integral image, using bilinear lookups of
// the integral at fractional cell edges (exact for piecewise-constant
// pixels), so any single feature costs O(1).

#include <array>
#include <cstdint>
#include <vector>

#include "vidpose/imageproc/rgb.hpp"

namespace vidpose {

struct WindowSpec {
    int side;   // odd
    int cells;  // downsample_to
    friend bool operator==(WindowSpec, WindowSpec) = default;
};

/// Window sizes spanning precise location (15 px) to global context (63 px).
inline const std::vector<WindowSpec>& default_windows() {
    static const std::vector<WindowSpec> w = {{15, 5}, {31, 5}, {63, 7}};
    return w;
}

class MultiWindowLayout {
public:
    MultiWindowLayout() : MultiWindowLayout(default_windows()) {}
    explicit MultiWindowLayout(std::vector<WindowSpec> windows) : windows_(std::move(windows)) {
        if (windows_.empty()) throw std::invalid_argument("MultiWindowLayout: no windows");
        int off = 0;
        for (const auto& w : windows_) {
            if (w.side < 3 || w.side % 2 == 0 || w.cells < 1 || w.cells > w.side)
                throw std::invalid_argument("MultiWindowLayout: bad window spec");
            offsets_.push_back(off);
            off += w.cells * w.cells * 3;
            max_half_ = std::max(max_half_, (w.side - 1) / 2);
        }
        dim_ = off;
        // Precompute per-feature geometry.
        for (std::size_t wi = 0; wi < windows_.size(); ++wi) {
            const auto& w = windows_[wi];
            const double step = double(w.side) / w.cells;
            const double h = (w.side - 1) / 2;
            for (int cy = 0; cy < w.cells; ++cy)
                for (int cx = 0; cx < w.cells; ++cx)
                    for (int c = 0; c < 3; ++c)
                        features_.push_back({float(-h + cx * step), float(-h + cy * step), float(-h + (cx + 1) * step),
                                             float(-h + (cy + 1) * step), std::uint8_t(c), float(1.0 / (step * step * 255.0))});
        }
    }

    int dim() const noexcept { return dim_; }
    int max_half() const noexcept { return max_half_; }
    const std::vector<WindowSpec>& windows() const noexcept { return windows_; }

    struct Feature {
        float x0, y0, x1, y1;  // pixel-edge offsets relative to the centre pixel's left/top edge
        std::uint8_t channel;
        float scale;
    };
    const Feature& feature(int i) const { return features_[std::size_t(i)]; }

    /// Reference path: concatenated rgb_vector of explicitly extracted patches.
    std::vector<float> from_patches(const RgbImage& frame, int cx, int cy) const {
        std::vector<float> out;
        out.reserve(std::size_t(dim_));
        for (const auto& w : windows_) {
            auto v = rgb_vector(extract_patch(frame, {double(cx), double(cy)}, w.side), w.cells);
            out.insert(out.end(), v.begin(), v.end());
        }
        return out;
    }

    friend bool operator==(const MultiWindowLayout& a, const MultiWindowLayout& b) { return a.windows_ == b.windows_; }

private:
    std::vector<WindowSpec> windows_;
    std::vector<int> offsets_;
    std::vector<Feature> features_;
    int dim_ = 0;
    int max_half_ = 0;
};

/// Edge-replicated padded integral image of an RGB frame.
class IntegralRgb {
public:
    IntegralRgb(const RgbImage& frame, int pad) : pad_(pad), w_(frame.width), h_(frame.height) {
        stride_ = w_ + 2 * pad_ + 1;
        const int rows = h_ + 2 * pad_ + 1;
        sums_.assign(std::size_t(stride_) * rows * 3, 0);
        for (int y = 1; y < rows; ++y) {
            std::uint32_t run[3] = {0, 0, 0};
            const int sy = std::clamp(y - 1 - pad_, 0, h_ - 1);
            for (int x = 1; x < stride_; ++x) {
                const int sx = std::clamp(x - 1 - pad_, 0, w_ - 1);
                for (int c = 0; c < 3; ++c) {
                    run[c] += frame.at(sx, sy, c);
                    sums_[idx(x, y, c)] = sums_[idx(x, y - 1, c)] + run[c];
                }
            }
        }
    }

    /// Integral at continuous pixel-edge coordinates (frame space, may be negative within padding).
    double at(double x, double y, int c) const {
        x += pad_;
        y += pad_;
        const int xi = std::clamp(int(std::floor(x)), 0, stride_ - 2);
        const int yi = std::clamp(int(std::floor(y)), 0, h_ + 2 * pad_ - 1);
        const double ax = x - xi, ay = y - yi;
        const double s00 = sums_[idx(xi, yi, c)], s10 = sums_[idx(xi + 1, yi, c)];
        const double s01 = sums_[idx(xi, yi + 1, c)], s11 = sums_[idx(xi + 1, yi + 1, c)];
        return (1 - ax) * (1 - ay) * s00 + ax * (1 - ay) * s10 + (1 - ax) * ay * s01 + ax * ay * s11;
    }

    float feature(const MultiWindowLayout::Feature& f, int cx, int cy) const {
        const double x0 = cx + f.x0, x1 = cx + f.x1, y0 = cy + f.y0, y1 = cy + f.y1;
        const double s = at(x1, y1, f.channel) - at(x0, y1, f.channel) - at(x1, y0, f.channel) + at(x0, y0, f.channel);
        return float(s * f.scale);
    }

    std::vector<float> features(const MultiWindowLayout& layout, int cx, int cy) const {
        std::vector<float> out(std::size_t(layout.dim()));
        for (int i = 0; i < layout.dim(); ++i) out[std::size_t(i)] = feature(layout.feature(i), cx, cy);
        return out;
    }

    int width() const noexcept { return w_; }
    int height() const noexcept { return h_; }

private:
    std::size_t idx(int x, int y, int c) const { return (std::size_t(y) * stride_ + x) * 3 + c; }

    int pad_, w_, h_, stride_ = 0;
    std::vector<std::uint32_t> sums_;
};

}  // namespace vidpose
