#pragma once

#include <stdexcept>

#include "vidpose/core/image.hpp"

namespace vidpose {

/// Square RGB patch (values in [0, 1]) centred on a sub-pixel location of a frame.
struct Patch {
    Point2 center;
    int side = 0;
    int frame = -1;
    FloatImage pixels;  // side x side x 3

    int half() const noexcept { return (side - 1) / 2; }
};

/// Bilinear, edge-clamped square crop. Patch pixel (i, j) samples the frame at
/// (center.x + i - half, center.y + j - half).
inline Patch extract_patch(const RgbImage& frame, Point2 center, int side, int frame_index = -1) {
    if (side < 3 || side % 2 == 0) throw std::invalid_argument("extract_patch: side must be odd and >= 3");
    if (frame.channels != 3 || frame.empty()) throw std::invalid_argument("extract_patch: expected a non-empty RGB frame");
    Patch p{center, side, frame_index, FloatImage(side, side, 3)};
    const int h = p.half();
    const double fx = std::floor(center.x), fy = std::floor(center.y);
    const bool integral = fx == center.x && fy == center.y;
    for (int j = 0; j < side; ++j)
        for (int i = 0; i < side; ++i) {
            if (integral) {
                for (int c = 0; c < 3; ++c)
                    p.pixels.at(i, j, c) = float(frame.clamped(int(fx) + i - h, int(fy) + j - h, c) / 255.0);
            } else {
                const double sx = center.x + i - h, sy = center.y + j - h;
                for (int c = 0; c < 3; ++c) p.pixels.at(i, j, c) = float(sample_bilinear(frame, sx, sy, c) / 255.0);
            }
        }
    return p;
}

/// Re-samples a patch as a frame; used to check idempotence of extraction.
inline Patch extract_patch(const Patch& src, Point2 center_in_patch, int side) {
    RgbImage tmp(src.side, src.side, 3);
    for (std::size_t k = 0; k < tmp.data.size(); ++k)
        tmp.data[k] = std::uint8_t(std::lround(std::clamp(src.pixels.data[k], 0.0f, 1.0f) * 255.0f));
    return extract_patch(tmp, center_in_patch, side, src.frame);
}

/// Rotates raster content by 90 degrees clockwise (x' = h-1-y, y' = x).
template <typename T>
Raster<T> rotate90(const Raster<T>& in) {
    Raster<T> out(in.height, in.width, in.channels);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x)
            for (int c = 0; c < in.channels; ++c) out.at(in.height - 1 - y, x, c) = in.at(x, y, c);
    return out;
}

}  // namespace vidpose
