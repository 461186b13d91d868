#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "vidpose/core/types.hpp"

namespace vidpose {

/// Row-major interleaved raster.
template <typename T>
struct Raster {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<T> data;

    Raster() = default;
    Raster(int w, int h, int c, T fill = T{}) : width(w), height(h), channels(c), data(std::size_t(w) * h * c, fill) {
        if (w < 0 || h < 0 || c < 1) throw std::invalid_argument("Raster: bad dimensions");
    }

    T& at(int x, int y, int c = 0) { return data[(std::size_t(y) * width + x) * channels + c]; }
    const T& at(int x, int y, int c = 0) const { return data[(std::size_t(y) * width + x) * channels + c]; }

    /// Edge-clamped read.
    const T& clamped(int x, int y, int c = 0) const {
        x = std::clamp(x, 0, width - 1);
        y = std::clamp(y, 0, height - 1);
        return at(x, y, c);
    }

    FrameSize size() const noexcept { return {width, height}; }
    bool empty() const noexcept { return data.empty(); }
    friend bool operator==(const Raster&, const Raster&) = default;
};

using RgbImage = Raster<std::uint8_t>;  // 3 channels, 0..255
using FloatImage = Raster<float>;

/// Bilinear sample of channel `c` at a continuous position, coordinates clamped to the raster.
template <typename T>
double sample_bilinear(const Raster<T>& img, double x, double y, int c = 0) {
    x = std::clamp(x, 0.0, double(img.width - 1));
    y = std::clamp(y, 0.0, double(img.height - 1));
    const int x0 = std::min(int(x), img.width - 1);
    const int y0 = std::min(int(y), img.height - 1);
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double ax = x - x0, ay = y - y0;
    const double top = (1 - ax) * double(img.at(x0, y0, c)) + ax * double(img.at(x1, y0, c));
    const double bot = (1 - ax) * double(img.at(x0, y1, c)) + ax * double(img.at(x1, y1, c));
    return (1 - ay) * top + ay * bot;
}

/// Luma in [0, 1].
inline FloatImage to_gray(const RgbImage& rgb) {
    FloatImage g(rgb.width, rgb.height, 1);
    for (int y = 0; y < rgb.height; ++y)
        for (int x = 0; x < rgb.width; ++x)
            g.at(x, y) = float((0.299 * rgb.at(x, y, 0) + 0.587 * rgb.at(x, y, 1) + 0.114 * rgb.at(x, y, 2)) / 255.0);
    return g;
}

/// Indexed RGB frame sequence at normalized person scale.
struct FrameStore {
    std::vector<RgbImage> frames;
    double scale_factor = 1.0;  // applied at ingest: stored = original * scale_factor

    int size() const noexcept { return int(frames.size()); }
    int width() const noexcept { return frames.empty() ? 0 : frames.front().width; }
    int height() const noexcept { return frames.empty() ? 0 : frames.front().height; }
    FrameSize frame_size() const noexcept { return {width(), height()}; }
    const RgbImage& operator[](int i) const { return frames.at(std::size_t(i)); }

    void push_back(RgbImage img) {
        if (img.channels != 3) throw std::invalid_argument("FrameStore: frames must be RGB");
        if (!frames.empty() && (img.width != width() || img.height != height()))
            throw std::invalid_argument("FrameStore: all frames must share identical dimensions");
        frames.push_back(std::move(img));
    }
};

struct GroundTruthEntry {
    std::optional<Point2> pos;
    bool occluded = false;
    friend bool operator==(const GroundTruthEntry&, const GroundTruthEntry&) = default;
};

/// Per (frame, joint) ground truth. Synthetic videos fill every frame; ingested ones may be sparse.
struct GroundTruth {
    int n_frames = 0;
    FrameSize size;
    std::vector<std::array<GroundTruthEntry, kJointCount>> entries;  // indexed by frame

    GroundTruth() = default;
    GroundTruth(int frames, FrameSize sz) : n_frames(frames), size(sz), entries(std::size_t(frames)) {}

    GroundTruthEntry& at(int frame, JointId j) { return entries.at(std::size_t(frame))[index_of(j)]; }
    const GroundTruthEntry& at(int frame, JointId j) const { return entries.at(std::size_t(frame))[index_of(j)]; }

    bool has(int frame, JointId j) const {
        return frame >= 0 && frame < n_frames && at(frame, j).pos.has_value();
    }
    bool occluded(int frame, JointId j) const { return has(frame, j) && at(frame, j).occluded; }
    friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

}  // namespace vidpose
