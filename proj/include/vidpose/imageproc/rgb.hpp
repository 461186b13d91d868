#pragma once

#include <stdexcept>
#include <vector>

#include "vidpose/imageproc/patch.hpp"

namespace vidpose {

namespace detail {
/// Row-stochastic overlap weights mapping `n` unit source bins onto `m` equal target bins.
inline std::vector<std::vector<std::pair<int, double>>> area_weights(int n, int m) {
    std::vector<std::vector<std::pair<int, double>>> w(static_cast<std::size_t>(m));
    const double step = double(n) / m;
    for (int k = 0; k < m; ++k) {
        const double lo = k * step, hi = (k + 1) * step;
        for (int i = int(std::floor(lo)); i < n && i < hi; ++i) {
            const double ov = std::min(hi, double(i + 1)) - std::max(lo, double(i));
            if (ov > 0) w[std::size_t(k)].emplace_back(i, ov / step);
        }
    }
    return w;
}
}  // namespace detail

/// Exact area-averaging resize (fractional pixel overlaps are weighted).
inline FloatImage area_resize(const FloatImage& in, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1 || out_w > in.width || out_h > in.height)
        throw std::invalid_argument("area_resize: target must be between 1 and the source size");
    const auto wx = detail::area_weights(in.width, out_w);
    const auto wy = detail::area_weights(in.height, out_h);
    FloatImage rows(out_w, in.height, in.channels);
    for (int y = 0; y < in.height; ++y)
        for (int k = 0; k < out_w; ++k)
            for (int c = 0; c < in.channels; ++c) {
                double s = 0;
                for (auto [i, w] : wx[std::size_t(k)]) s += w * in.at(i, y, c);
                rows.at(k, y, c) = float(s);
            }
    FloatImage out(out_w, out_h, in.channels);
    for (int k = 0; k < out_h; ++k)
        for (int x = 0; x < out_w; ++x)
            for (int c = 0; c < in.channels; ++c) {
                double s = 0;
                for (auto [j, w] : wy[std::size_t(k)]) s += w * rows.at(x, j, c);
                out.at(x, k, c) = float(s);
            }
    return out;
}

/// Area-averaged downsample of a patch to downsample_to x downsample_to, flattened
/// row-major with channels interleaved. Values in [0, 1].
inline std::vector<float> rgb_vector(const Patch& patch, int downsample_to) {
    if (downsample_to < 1 || downsample_to > patch.side)
        throw std::invalid_argument("rgb_vector: downsample_to must lie in [1, side]");
    if (downsample_to == patch.side) return patch.pixels.data;
    return area_resize(patch.pixels, downsample_to, downsample_to).data;
}

/// Same flattening for non-square rasters.
inline std::vector<float> rgb_vector(const FloatImage& img, int out_w, int out_h) {
    if (out_w == img.width && out_h == img.height) return img.data;
    return area_resize(img, out_w, out_h).data;
}

}  // namespace vidpose
