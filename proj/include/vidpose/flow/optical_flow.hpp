#pragma once

// Dense optical flow: pyramidal iterative Lucas-Kanade.
//
// Per pyramid level (coarse to fine): a 5x5 structure tensor of the first
// image, a fixed number of warp iterations solving the damped 2x2 normal
// equations at every pixel, then a 5x5 median filter on the field. The
// Tikhonov term keeps the system defined where the image has no gradient;
// there the update is exactly zero.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "vidpose/core/image.hpp"

namespace vidpose {

enum class FlowDirection : std::uint32_t { Forward = 0, Backward = 1 };

/// Per-pixel displacement from the source frame into the target frame.
struct FlowField {
    int width = 0;
    int height = 0;
    FlowDirection direction = FlowDirection::Forward;
    std::vector<float> u;
    std::vector<float> v;

    FlowField() = default;
    FlowField(int w, int h, FlowDirection d = FlowDirection::Forward)
        : width(w), height(h), direction(d), u(std::size_t(w) * h, 0.0f), v(std::size_t(w) * h, 0.0f) {}

    float& du(int x, int y) { return u[std::size_t(y) * width + x]; }
    float& dv(int x, int y) { return v[std::size_t(y) * width + x]; }
    float du(int x, int y) const { return u[std::size_t(y) * width + x]; }
    float dv(int x, int y) const { return v[std::size_t(y) * width + x]; }
    FrameSize size() const noexcept { return {width, height}; }
    friend bool operator==(const FlowField&, const FlowField&) = default;
};

struct FlowParams {
    int levels = 4;
    int window = 5;
    int iterations = 3;
    int median = 5;
    double damping = 1e-4;
};

namespace detail {

inline FloatImage pyr_down(const FloatImage& in) {
    // [1 2 1]/4 separable blur, then decimate by two.
    FloatImage tmp(in.width, in.height, 1);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x)
            tmp.at(x, y) = 0.25f * in.clamped(x - 1, y) + 0.5f * in.at(x, y) + 0.25f * in.clamped(x + 1, y);
    FloatImage out((in.width + 1) / 2, (in.height + 1) / 2, 1);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            const int sx = 2 * x, sy = 2 * y;
            out.at(x, y) = 0.25f * tmp.clamped(sx, sy - 1) + 0.5f * tmp.at(sx, sy) + 0.25f * tmp.clamped(sx, sy + 1);
        }
    return out;
}

/// Sum over a (2r+1)^2 window, truncated at the borders.
inline std::vector<double> box_sum(const std::vector<double>& in, int w, int h, int r) {
    std::vector<double> rows(in.size()), out(in.size());
    std::vector<double> prefix(std::size_t(std::max(w, h)) + 1);
    for (int y = 0; y < h; ++y) {
        const double* src = &in[std::size_t(y) * w];
        prefix[0] = 0.0;
        for (int x = 0; x < w; ++x) prefix[std::size_t(x) + 1] = prefix[std::size_t(x)] + src[x];
        for (int x = 0; x < w; ++x)
            rows[std::size_t(y) * w + x] = prefix[std::size_t(std::min(w, x + r + 1))] - prefix[std::size_t(std::max(0, x - r))];
    }
    for (int x = 0; x < w; ++x) {
        prefix[0] = 0.0;
        for (int y = 0; y < h; ++y) prefix[std::size_t(y) + 1] = prefix[std::size_t(y)] + rows[std::size_t(y) * w + x];
        for (int y = 0; y < h; ++y)
            out[std::size_t(y) * w + x] = prefix[std::size_t(std::min(h, y + r + 1))] - prefix[std::size_t(std::max(0, y - r))];
    }
    return out;
}

/// Median of 25 values by a fixed selection network (in place).
inline float median25(float* p) {
    auto s = [p](int a, int b) {
        const float lo = std::min(p[a], p[b]), hi = std::max(p[a], p[b]);
        p[a] = lo;
        p[b] = hi;
    };
    s(0, 1); s(3, 4); s(2, 4); s(2, 3); s(6, 7); s(5, 7); s(5, 6); s(9, 10); s(8, 10); s(8, 9); s(12, 13);
    s(11, 13); s(11, 12); s(15, 16); s(14, 16); s(14, 15); s(18, 19); s(17, 19); s(17, 18); s(21, 22); s(20, 22);
    s(20, 21); s(23, 24); s(2, 5); s(3, 6); s(0, 6); s(0, 3); s(4, 7); s(1, 7); s(1, 4); s(11, 14); s(8, 14);
    s(8, 11); s(12, 15); s(9, 15); s(9, 12); s(13, 16); s(10, 16); s(10, 13); s(20, 23); s(17, 23); s(17, 20);
    s(21, 24); s(18, 24); s(18, 21); s(19, 22); s(8, 17); s(9, 18); s(0, 18); s(0, 9); s(10, 19); s(1, 19);
    s(1, 10); s(11, 20); s(2, 20); s(2, 11); s(12, 21); s(3, 21); s(3, 12); s(13, 22); s(4, 22); s(4, 13);
    s(14, 23); s(5, 23); s(5, 14); s(15, 24); s(6, 24); s(6, 15); s(7, 16); s(7, 19); s(13, 21); s(15, 23);
    s(7, 13); s(7, 15); s(1, 9); s(3, 11); s(5, 17); s(11, 17); s(9, 17); s(4, 10); s(6, 12); s(7, 14); s(4, 6);
    s(4, 7); s(12, 14); s(10, 14); s(6, 7); s(10, 12); s(6, 10); s(6, 17); s(12, 17); s(7, 17); s(7, 10);
    s(12, 18); s(7, 12); s(10, 18); s(12, 20); s(10, 20); s(10, 12);
    return p[12];
}

inline void median_filter(std::vector<float>& f, int w, int h, int size) {
    if (size <= 1) return;
    const int r = size / 2;
    const std::vector<float> src = f;
    std::vector<float> buf(std::size_t(size) * size);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::size_t n = 0;
            for (int dy = -r; dy <= r; ++dy) {
                const float* row = &src[std::size_t(std::clamp(y + dy, 0, h - 1)) * w];
                for (int dx = -r; dx <= r; ++dx) buf[n++] = row[std::clamp(x + dx, 0, w - 1)];
            }
            if (size == 5) {
                f[std::size_t(y) * w + x] = median25(buf.data());
            } else {
                auto mid = buf.begin() + std::ptrdiff_t(buf.size() / 2);
                std::nth_element(buf.begin(), mid, buf.end());
                f[std::size_t(y) * w + x] = *mid;
            }
        }
}

inline void lk_level(const FloatImage& a, const FloatImage& b, FlowField& flow, const FlowParams& p) {
    const int w = a.width, h = a.height;
    const std::size_t n = std::size_t(w) * h;
    std::vector<double> ix(n), iy(n), ixx(n), ixy(n), iyy(n);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t k = std::size_t(y) * w + x;
            ix[k] = 0.5 * (double(a.clamped(x + 1, y)) - a.clamped(x - 1, y));
            iy[k] = 0.5 * (double(a.clamped(x, y + 1)) - a.clamped(x, y - 1));
            ixx[k] = ix[k] * ix[k];
            ixy[k] = ix[k] * iy[k];
            iyy[k] = iy[k] * iy[k];
        }
    const int r = p.window / 2;
    const auto gxx = box_sum(ixx, w, h, r), gxy = box_sum(ixy, w, h, r), gyy = box_sum(iyy, w, h, r);
    std::vector<double> bx(n), by(n);
    for (int it = 0; it < p.iterations; ++it) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const std::size_t k = std::size_t(y) * w + x;
                const double it_val = sample_bilinear(b, x + flow.u[k], y + flow.v[k]) - a.at(x, y);
                bx[k] = ix[k] * it_val;
                by[k] = iy[k] * it_val;
            }
        const auto sbx = box_sum(bx, w, h, r), sby = box_sum(by, w, h, r);
        for (std::size_t k = 0; k < n; ++k) {
            const double a11 = gxx[k] + p.damping, a12 = gxy[k], a22 = gyy[k] + p.damping;
            const double det = a11 * a22 - a12 * a12;
            const double du = -(a22 * sbx[k] - a12 * sby[k]) / det;
            const double dv = -(a11 * sby[k] - a12 * sbx[k]) / det;
            flow.u[k] += float(du);
            flow.v[k] += float(dv);
        }
    }
    median_filter(flow.u, w, h, p.median);
    median_filter(flow.v, w, h, p.median);
}

}  // namespace detail

/// Flow from `a` into `b` on grayscale images in [0, 1].
inline FlowField compute_flow(const FloatImage& a, const FloatImage& b, FlowDirection dir = FlowDirection::Forward,
                              const FlowParams& params = {}) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("compute_flow: frames must have identical dimensions");
    if (a.channels != 1 || b.channels != 1) throw std::invalid_argument("compute_flow: expected grayscale input");
    std::vector<FloatImage> pa{a}, pb{b};
    for (int l = 1; l < params.levels; ++l) {
        if (pa.back().width < 8 || pa.back().height < 8) break;
        pa.push_back(detail::pyr_down(pa.back()));
        pb.push_back(detail::pyr_down(pb.back()));
    }
    FlowField flow(pa.back().width, pa.back().height, dir);
    for (int l = int(pa.size()) - 1; l >= 0; --l) {
        if (l != int(pa.size()) - 1) {
            FlowField up(pa[std::size_t(l)].width, pa[std::size_t(l)].height, dir);
            FloatImage cu(flow.width, flow.height, 1), cv(flow.width, flow.height, 1);
            cu.data = flow.u;
            cv.data = flow.v;
            for (int y = 0; y < up.height; ++y)
                for (int x = 0; x < up.width; ++x) {
                    up.du(x, y) = float(2.0 * sample_bilinear(cu, x / 2.0, y / 2.0));
                    up.dv(x, y) = float(2.0 * sample_bilinear(cv, x / 2.0, y / 2.0));
                }
            flow = std::move(up);
        }
        detail::lk_level(pa[std::size_t(l)], pb[std::size_t(l)], flow, params);
    }
    return flow;
}

inline FlowField compute_flow(const RgbImage& a, const RgbImage& b, FlowDirection dir = FlowDirection::Forward,
                              const FlowParams& params = {}) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("compute_flow: frames must have identical dimensions");
    return compute_flow(to_gray(a), to_gray(b), dir, params);
}

/// Bilinearly interpolated displacement at p, without bounds handling.
inline Point2 displacement_at(const FlowField& f, Point2 p) {
    const double x = std::clamp(p.x, 0.0, double(f.width - 1));
    const double y = std::clamp(p.y, 0.0, double(f.height - 1));
    const int x0 = std::min(int(x), f.width - 1), y0 = std::min(int(y), f.height - 1);
    const int x1 = std::min(x0 + 1, f.width - 1), y1 = std::min(y0 + 1, f.height - 1);
    const double ax = x - x0, ay = y - y0;
    auto lerp2 = [&](const std::vector<float>& c) {
        auto at = [&](int xx, int yy) { return double(c[std::size_t(yy) * f.width + xx]); };
        return (1 - ay) * ((1 - ax) * at(x0, y0) + ax * at(x1, y0)) + ay * ((1 - ax) * at(x0, y1) + ax * at(x1, y1));
    };
    return {lerp2(f.u), lerp2(f.v)};
}

/// Moves p along the field; the result is clamped to the frame.
inline Point2 advect(Point2 p, const FlowField& f) {
    if (!f.size().contains(p)) throw std::invalid_argument("advect: point outside the flow field");
    return f.size().clamp(p + displacement_at(f, p));
}

}  // namespace vidpose
