#pragma once

// Synthetic upper-body puppet videos with exact ground truth.
//
// The figure is a torso, a neck, a head disc and two arms of two segments,
// all drawn as anti-aliased signed-distance shapes. Joint angles follow
// per-frame scripts or sums of sinusoids. Pixel noise and all sampling are
// driven by seeds derived from the caller's seed, so the same (config, seed)
// always yields the same bytes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "vidpose/core/annotation.hpp"
#include "vidpose/core/errors.hpp"
#include "vidpose/core/image.hpp"
#include "vidpose/core/kv_config.hpp"
#include "vidpose/util/parallel.hpp"
#include "vidpose/util/rng.hpp"

namespace vidpose {

using Rgb = std::array<std::uint8_t, 3>;

enum class BackgroundMode : std::uint8_t { Uniform, Textured, Scrolling };

/// Angles in degrees. The upper arm is measured from straight down, positive
/// away from the body; the forearm angle is relative to the upper arm.
struct ArmAngles {
    double shoulder = 0.0;
    double elbow = 0.0;
};

/// angle(t) = base + amplitude * sin(2*pi*t/period + phase)
struct Oscillation {
    double base = 0.0;
    double amplitude = 0.0;
    double period = 100.0;  // frames
    double phase = 0.0;     // radians

    double at(int t) const { return base + amplitude * std::sin(2.0 * std::numbers::pi * t / period + phase); }
};

struct ArmMotion {
    Oscillation shoulder;
    Oscillation elbow;
    Oscillation shoulder2{0, 0, 100, 0};  // added to the primary terms
    Oscillation elbow2{0, 0, 100, 0};
};

struct Marker {
    JointId joint = JointId::LWrist;
    Rgb color{};
    double radius = 7.0;
};

/// Background object moving behind the figure.
struct Distractor {
    Rgb color{};
    double radius = 8.0;
    Oscillation x;
    Oscillation y;
};

struct OcclusionEvent {
    int first = 0;  // inclusive frame range
    int last = 0;
    std::vector<JointId> joints;  // anchor joints when `anchored`
    bool anchored = false;        // rectangle centred on the mean of `joints` each frame
    double x = 0, y = 0;          // top-left corner when not anchored
    double w = 20, h = 20;
    Rgb color{128, 128, 128};
};

struct SceneConfig {
    int n_frames = 500;
    int width = 288;
    int height = 224;

    // Figure geometry (px).
    Point2 neck_base{144, 100};  // midpoint between the shoulders at rest
    double shoulder_width = 100;
    double upper_arm = 48;
    double lower_arm = 44;
    double torso_length = 110;
    double neck_length = 24;
    double head_radius = 19;
    double upper_arm_radius = 8;
    double lower_arm_radius = 6.5;

    // Whole-body motion.
    Oscillation sway_x{0, 8, 150, 0};
    Oscillation bob_y{0, 3, 70, 1.0};
    Point2 camera_shift{0, 0};  // px per frame, moves everything

    ArmMotion left{{25, 20, 170, 0.3}, {40, 70, 110, 1.1}, {0, 25, 67, 0.7}, {0, 40, 53, 2.1}};
    ArmMotion right{{25, 20, 190, 2.0}, {40, 70, 95, 4.0}, {0, 25, 79, 1.9}, {0, 40, 61, 0.4}};
    std::vector<std::array<ArmAngles, 2>> script;  // per-frame [left, right]; overrides the oscillations

    BackgroundMode background = BackgroundMode::Scrolling;
    Point2 scroll{1.5, 0.4};  // background px per frame in scrolling mode
    Rgb background_color{96, 112, 96};
    Rgb shirt_color{52, 78, 150};
    Rgb skin_color{226, 182, 150};
    Rgb hair_color{60, 40, 28};
    Rgb strap_color{38, 30, 26};  // bag strap over the left shoulder
    std::vector<Marker> markers = {{JointId::LWrist, {230, 40, 40}, 7.0}, {JointId::RWrist, {40, 90, 230}, 7.0}};
    std::vector<Distractor> distractors = {{{240, 150, 90}, 10, {60, 45, 130, 0}, {60, 30, 90, 1}},
                                           {{220, 200, 60}, 7, {230, 40, 110, 2}, {50, 25, 150, 0.5}},
                                           {{40, 150, 160}, 7, {50, 30, 170, 1.5}, {180, 25, 120, 3}},
                                           {{200, 160, 170}, 9, {240, 30, 95, 3.3}, {170, 30, 140, 2.2}},
                                           {{225, 50, 45}, 6, {150, 80, 140, 0.8}, {190, 20, 100, 2.5}},
                                           {{215, 175, 145}, 15, {240, 30, 180, 2.8}, {120, 40, 210, 0.2}}};
    std::vector<OcclusionEvent> occlusions;
    Oscillation illumination{1, 0.35, 230, 0.4};  // global gain
    Oscillation tint{0, 30, 330, 1.0};            // added to red, subtracted from blue
    double noise_sigma = 4.0;

    void validate() const;
};

/// Joint positions for one frame.
using Pose = std::array<Point2, kJointCount>;

namespace detail {

inline double deg(double d) { return d * std::numbers::pi / 180.0; }

inline double seg_distance(Point2 p, Point2 a, Point2 b, double* t_out = nullptr) {
    const Point2 ab = b - a, ap = p - a;
    const double len2 = ab.x * ab.x + ab.y * ab.y;
    double t = len2 > 0 ? (ap.x * ab.x + ap.y * ab.y) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    if (t_out) *t_out = t;
    return distance(p, a + ab * t);
}

}  // namespace detail

inline ArmAngles arm_angles(const SceneConfig& c, int t, ArmSide side) {
    if (!c.script.empty()) return c.script[std::size_t(t)][side == ArmSide::Left ? 0 : 1];
    const ArmMotion& m = side == ArmSide::Left ? c.left : c.right;
    return {m.shoulder.at(t) + m.shoulder2.at(t), m.elbow.at(t) + m.elbow2.at(t)};
}

/// Forward kinematics of the figure at frame t.
inline Pose pose_at(const SceneConfig& c, int t) {
    const Point2 shift = c.camera_shift * double(t);
    const Point2 neck = c.neck_base + Point2{c.sway_x.at(t), c.bob_y.at(t)} + shift;
    Pose p{};
    p[index_of(JointId::Head)] = neck + Point2{0, -(c.neck_length + c.head_radius)};
    for (ArmSide side : {ArmSide::Left, ArmSide::Right}) {
        // The figure faces the camera: its left side is on the image right.
        const double s = side == ArmSide::Left ? 1.0 : -1.0;
        const ArmAngles a = arm_angles(c, t, side);
        const double th = detail::deg(a.shoulder), tf = detail::deg(a.shoulder + a.elbow);
        const Point2 sh = neck + Point2{s * c.shoulder_width / 2, 0};
        const Point2 el = sh + Point2{s * std::sin(th), std::cos(th)} * c.upper_arm;
        const Point2 wr = el + Point2{s * std::sin(tf), std::cos(tf)} * c.lower_arm;
        p[index_of(side == ArmSide::Left ? JointId::LShoulder : JointId::RShoulder)] = sh;
        p[index_of(elbow_of(side))] = el;
        p[index_of(wrist_of(side))] = wr;
    }
    return p;
}

struct OccluderRect {
    double x0, y0, x1, y1;
    Rgb color;
    bool contains(Point2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

inline std::vector<OccluderRect> occluders_at(const SceneConfig& c, const Pose& pose, int t) {
    std::vector<OccluderRect> out;
    for (const auto& e : c.occlusions) {
        if (t < e.first || t > e.last) continue;
        double x = e.x, y = e.y;
        if (e.anchored) {
            Point2 m{0, 0};
            for (JointId j : e.joints) m = m + pose[index_of(j)];
            m = m * (1.0 / double(e.joints.size()));
            x = m.x - e.w / 2;
            y = m.y - e.h / 2;
        }
        out.push_back({x, y, x + e.w, y + e.h, e.color});
    }
    return out;
}

inline void SceneConfig::validate() const {
    auto positive = [](const char* field, double v) {
        if (!(v > 0)) throw ConfigError(field, "must be > 0");
    };
    if (n_frames < 1) throw ConfigError("scene.n_frames", "must be >= 1");
    if (width < 16 || height < 16) throw ConfigError("scene.width", "frame must be at least 16x16");
    positive("scene.shoulder_width", shoulder_width);
    positive("scene.upper_arm", upper_arm);
    positive("scene.lower_arm", lower_arm);
    positive("scene.torso_length", torso_length);
    positive("scene.neck_length", neck_length);
    positive("scene.head_radius", head_radius);
    positive("scene.upper_arm_radius", upper_arm_radius);
    positive("scene.lower_arm_radius", lower_arm_radius);
    for (const auto* o : {&sway_x, &bob_y, &left.shoulder, &left.elbow, &right.shoulder, &right.elbow, &left.shoulder2,
                          &left.elbow2, &right.shoulder2, &right.elbow2, &illumination, &tint})
        positive("scene.period", o->period);
    for (const auto& d : distractors) {
        positive("scene.distractor.radius", d.radius);
        positive("scene.period", std::min(d.x.period, d.y.period));
    }
    for (int t = 0; t < n_frames; ++t)
        if (!(illumination.at(t) > 0)) throw ConfigError("scene.illumination", "gain must stay > 0");
    if (noise_sigma < 0) throw ConfigError("scene.noise_sigma", "must be >= 0");
    if (!script.empty() && int(script.size()) != n_frames)
        throw ConfigError("scene.script", "needs one entry per frame");
    for (const auto& m : markers) positive("scene.marker_radius", m.radius);
    for (const auto& e : occlusions) {
        if (e.first < 0 || e.last < e.first) throw ConfigError("scene.occlusion.frames", "bad frame range");
        positive("scene.occlusion.size", std::min(e.w, e.h));
        if (e.anchored && e.joints.empty()) throw ConfigError("scene.occlusion.joints", "anchored occluder needs joints");
        if (!e.anchored && (e.x < 0 || e.y < 0 || e.x + e.w > width || e.y + e.h > height))
            throw ConfigError("scene.occlusion.rect", "occluder rectangle must lie inside the frame");
    }
    // Every joint must stay inside the frame.
    const FrameSize size{width, height};
    for (int t = 0; t < n_frames; ++t) {
        const Pose p = pose_at(*this, t);
        for (JointId j : kAllJoints)
            if (!size.contains(p[index_of(j)]))
                throw ConfigError("scene.motion", std::string(joint_name(j)) + " leaves the frame at t=" + std::to_string(t));
    }
}

namespace detail {

/// Smooth value noise in [0, 1] with a hashed lattice.
inline double lattice(std::uint64_t seed, long long ix, long long iy) {
    const std::uint64_t h = splitmix64(seed ^ splitmix64(std::uint64_t(ix) * 0x9e3779b97f4a7c15ULL + std::uint64_t(iy)));
    return double(h >> 11) * 0x1.0p-53;
}

inline double value_noise(std::uint64_t seed, double x, double y, double scale) {
    x /= scale;
    y /= scale;
    const double fx = std::floor(x), fy = std::floor(y);
    const long long ix = (long long)fx, iy = (long long)fy;
    double ax = x - fx, ay = y - fy;
    ax = ax * ax * (3 - 2 * ax);
    ay = ay * ay * (3 - 2 * ay);
    const double a = lattice(seed, ix, iy), b = lattice(seed, ix + 1, iy);
    const double c = lattice(seed, ix, iy + 1), d = lattice(seed, ix + 1, iy + 1);
    return (1 - ay) * ((1 - ax) * a + ax * b) + ay * ((1 - ax) * c + ax * d);
}

struct Canvas {
    int w, h;
    std::vector<float> px;  // RGB, 0..255

    void blend(int x, int y, double alpha, double r, double g, double b) {
        if (alpha <= 0) return;
        alpha = std::min(alpha, 1.0);
        float* p = &px[(std::size_t(y) * w + x) * 3];
        p[0] = float(p[0] + alpha * (r - p[0]));
        p[1] = float(p[1] + alpha * (g - p[1]));
        p[2] = float(p[2] + alpha * (b - p[2]));
    }

    /// Fills the shape given by a signed distance `sdf(x, y)` (negative inside) over a bounding box.
    template <typename Sdf, typename Color>
    void fill(double x0, double y0, double x1, double y1, Sdf&& sdf, Color&& color) {
        const int ix0 = std::max(0, int(std::floor(x0)) - 1), iy0 = std::max(0, int(std::floor(y0)) - 1);
        const int ix1 = std::min(w - 1, int(std::ceil(x1)) + 1), iy1 = std::min(h - 1, int(std::ceil(y1)) + 1);
        for (int y = iy0; y <= iy1; ++y)
            for (int x = ix0; x <= ix1; ++x) {
                const double d = sdf(double(x), double(y));
                const double alpha = std::clamp(0.5 - d, 0.0, 1.0);
                if (alpha <= 0) continue;
                const auto c = color(double(x), double(y));
                blend(x, y, alpha, c[0], c[1], c[2]);
            }
    }
};

inline std::array<double, 3> shade(const Rgb& c, double delta) {
    return {std::clamp(c[0] + delta, 0.0, 255.0), std::clamp(c[1] + delta, 0.0, 255.0), std::clamp(c[2] + delta, 0.0, 255.0)};
}

}  // namespace detail

/// Background raster (floating-point RGB) displaced by `offset`.
inline std::vector<float> render_background(const SceneConfig& c, Point2 offset, std::uint64_t seed) {
    std::vector<float> px(std::size_t(c.width) * c.height * 3);
    const std::uint64_t tex_seed = derive_seed(seed, {std::uint64_t(Stage::Synth), 0xBAC});
    for (int y = 0; y < c.height; ++y)
        for (int x = 0; x < c.width; ++x) {
            float* p = &px[(std::size_t(y) * c.width + x) * 3];
            double r = c.background_color[0], g = c.background_color[1], b = c.background_color[2];
            if (c.background != BackgroundMode::Uniform) {
                const double u = x - offset.x, v = y - offset.y;
                const double n1 = detail::value_noise(tex_seed, u, v, 18.0) - 0.5;
                const double n2 = detail::value_noise(tex_seed + 1, u, v, 6.0) - 0.5;
                const double n3 = detail::value_noise(tex_seed + 2, u, v, 30.0) - 0.5;
                r += 70 * n1 + 35 * n2;
                g += 60 * n1 + 30 * n2 + 40 * n3;
                b += 50 * n1 + 35 * n2 - 40 * n3;
            }
            p[0] = float(std::clamp(r, 0.0, 255.0));
            p[1] = float(std::clamp(g, 0.0, 255.0));
            p[2] = float(std::clamp(b, 0.0, 255.0));
        }
    return px;
}

inline Point2 background_offset(const SceneConfig& c, int t) {
    Point2 off = c.camera_shift * double(t);
    if (c.background == BackgroundMode::Scrolling) off = off + c.scroll * double(t);
    return off;
}

/// Renders frame t without pixel noise (floating-point RGB in 0..255). A
/// precomputed background may be passed when it does not move.
inline std::vector<float> render_clean(const SceneConfig& c, int t, std::uint64_t seed,
                                       const std::vector<float>* static_background = nullptr) {
    detail::Canvas cv{c.width, c.height,
                      static_background ? *static_background : render_background(c, background_offset(c, t), seed)};
    const Pose pose = pose_at(c, t);

    for (const auto& d : c.distractors) {
        const Point2 q{d.x.at(t), d.y.at(t)};
        auto sdf = [&](double x, double y) { return std::hypot(x - q.x, y - q.y) - d.radius; };
        auto col = [&](double x, double y) { return detail::shade(d.color, 20 * (x - q.x + y - q.y) / d.radius); };
        cv.fill(q.x - d.radius, q.y - d.radius, q.x + d.radius, q.y + d.radius, sdf, col);
    }

    const Point2 ls = pose[index_of(JointId::LShoulder)], rs = pose[index_of(JointId::RShoulder)];
    const Point2 neck = (ls + rs) * 0.5;
    const Point2 head = pose[index_of(JointId::Head)];

    // Torso: rounded box from the shoulder line down, with a fabric pattern attached to the body.
    {
        const double hx = c.shoulder_width / 2 + 4, hy = c.torso_length / 2, rad = 12;
        const Point2 ctr = neck + Point2{0, hy - 6};
        auto sdf = [&](double x, double y) {
            const double qx = std::abs(x - ctr.x) - (hx - rad), qy = std::abs(y - ctr.y) - (hy - rad);
            return std::hypot(std::max(qx, 0.0), std::max(qy, 0.0)) + std::min(std::max(qx, qy), 0.0) - rad;
        };
        auto col = [&](double x, double y) {
            const double u = x - neck.x, v = y - neck.y;
            return detail::shade(c.shirt_color, 16 * std::sin(u / 4.0) * std::sin(v / 5.0) + 10 * std::sin((u + v) / 9.0));
        };
        cv.fill(ctr.x - hx, ctr.y - hy, ctr.x + hx, ctr.y + hy, sdf, col);
        // Strap from the left shoulder to the right hip breaks the mirror symmetry.
        const Point2 a = ls + Point2{-7, -4}, b = Point2{rs.x + 4, ctr.y + hy};
        auto ssdf = [&](double x, double y) { return std::max(detail::seg_distance({x, y}, a, b) - 4.5, sdf(x, y)); };
        auto scol = [&](double x, double y) { return detail::shade(c.strap_color, 6 * std::sin((x + y) / 3.0)); };
        cv.fill(ctr.x - hx, ctr.y - hy, ctr.x + hx, ctr.y + hy, ssdf, scol);
    }
    // Neck and head.
    {
        const Point2 a = neck + Point2{0, 2}, b = head;
        auto sdf = [&](double x, double y) { return detail::seg_distance({x, y}, a, b) - 8.0; };
        auto col = [&](double, double) { return detail::shade(c.skin_color, -12); };
        cv.fill(std::min(a.x, b.x) - 9, std::min(a.y, b.y) - 9, std::max(a.x, b.x) + 9, std::max(a.y, b.y) + 9, sdf, col);
        const double r = c.head_radius;
        auto hs = [&](double x, double y) { return std::hypot(x - head.x, y - head.y) - r; };
        auto hc = [&](double x, double y) {
            // Hair on the upper part of the head, eyes as two dark dots.
            if (y < head.y - r * 0.25 + 3 * std::sin((x - head.x) / 4.0)) return detail::shade(c.hair_color, 0);
            for (double ex : {-r * 0.38, r * 0.38})
                if (std::hypot(x - head.x - ex, y - head.y + r * 0.05) < 2.6) return std::array<double, 3>{30, 30, 40};
            if (std::abs(x - head.x) < r * 0.3 && std::abs(y - head.y - r * 0.5) < 1.5) return std::array<double, 3>{150, 70, 70};
            return detail::shade(c.skin_color, 0);
        };
        cv.fill(head.x - r, head.y - r, head.x + r, head.y + r, hs, hc);
    }
    // Arms: right first, so the left arm is drawn on top where they cross.
    for (ArmSide side : {ArmSide::Right, ArmSide::Left}) {
        const Point2 sh = pose[index_of(side == ArmSide::Left ? JointId::LShoulder : JointId::RShoulder)];
        const Point2 el = pose[index_of(elbow_of(side))];
        const Point2 wr = pose[index_of(wrist_of(side))];
        auto capsule = [&](Point2 a, Point2 b, double rad, auto color) {
            auto sdf = [&](double x, double y) { return detail::seg_distance({x, y}, a, b) - rad; };
            cv.fill(std::min(a.x, b.x) - rad, std::min(a.y, b.y) - rad, std::max(a.x, b.x) + rad, std::max(a.y, b.y) + rad, sdf,
                    color);
        };
        const double sleeve_shade = side == ArmSide::Left ? -14 : -24;
        capsule(sh, el, c.upper_arm_radius, [&](double x, double y) {
            double t = 0;
            detail::seg_distance({x, y}, sh, el, &t);
            return detail::shade(c.shirt_color, sleeve_shade + 14 * std::sin(t * c.upper_arm / 3.5));
        });
        capsule(el, wr, c.lower_arm_radius, [&](double x, double y) {
            double t = 0;
            detail::seg_distance({x, y}, el, wr, &t);
            return detail::shade(c.skin_color, -8 * std::cos(t * c.lower_arm / 6.0));
        });
    }
    for (const auto& m : c.markers) {
        const Point2 q = pose[index_of(m.joint)];
        auto sdf = [&](double x, double y) { return std::hypot(x - q.x, y - q.y) - m.radius; };
        auto col = [&](double x, double y) {
            const double d = std::hypot(x - q.x, y - q.y) / m.radius;
            return detail::shade(m.color, 30 * (1 - d) - 15);
        };
        cv.fill(q.x - m.radius, q.y - m.radius, q.x + m.radius, q.y + m.radius, sdf, col);
    }
    for (const auto& r : occluders_at(c, pose, t)) {
        auto sdf = [&](double x, double y) {
            return std::max({r.x0 - x, x - r.x1, r.y0 - y, y - r.y1});
        };
        auto col = [&](double, double) { return std::array<double, 3>{double(r.color[0]), double(r.color[1]), double(r.color[2])}; };
        cv.fill(r.x0, r.y0, r.x1, r.y1, sdf, col);
    }
    const double gain = c.illumination.at(t), tint = c.tint.at(t);
    if (gain != 1.0 || tint != 0.0)
        for (std::size_t k = 0; k < cv.px.size(); k += 3) {
            cv.px[k] = float(std::clamp(cv.px[k] * gain + tint, 0.0, 255.0));
            cv.px[k + 1] = float(std::clamp(cv.px[k + 1] * gain, 0.0, 255.0));
            cv.px[k + 2] = float(std::clamp(cv.px[k + 2] * gain - tint, 0.0, 255.0));
        }
    return std::move(cv.px);
}

inline RgbImage render_frame(const SceneConfig& c, int t, std::uint64_t seed,
                             const std::vector<float>* static_background = nullptr) {
    const auto clean = render_clean(c, t, seed, static_background);
    RgbImage img(c.width, c.height, 3);
    // Counter-based Box-Muller: each pair of samples hashes its own index.
    const std::uint64_t key = derive_seed(seed, {std::uint64_t(Stage::Synth), std::uint64_t(t)});
    for (std::size_t k = 0; k < clean.size(); k += 2) {
        double n0 = 0, n1 = 0;
        if (c.noise_sigma > 0) {
            const std::uint64_t h = splitmix64(key + k);
            const double u1 = (double(h >> 40) + 0.5) * 0x1.0p-24;
            const double u2 = double((h >> 16) & 0xFFFFFF) * 0x1.0p-24;
            const double r = std::sqrt(-2.0 * std::log(u1)) * c.noise_sigma;
            n0 = r * std::cos(2 * std::numbers::pi * u2);
            n1 = r * std::sin(2 * std::numbers::pi * u2);
        }
        img.data[k] = std::uint8_t(std::clamp(std::lround(clean[k] + n0), 0L, 255L));
        if (k + 1 < clean.size()) img.data[k + 1] = std::uint8_t(std::clamp(std::lround(clean[k + 1] + n1), 0L, 255L));
    }
    return img;
}

inline GroundTruth scene_ground_truth(const SceneConfig& c) {
    GroundTruth gt(c.n_frames, {c.width, c.height});
    for (int t = 0; t < c.n_frames; ++t) {
        const Pose p = pose_at(c, t);
        const auto rects = occluders_at(c, p, t);
        for (JointId j : kAllJoints) {
            const Point2 q = p[index_of(j)];
            bool occ = false;
            for (const auto& r : rects) occ = occ || r.contains(q);
            gt.at(t, j) = {q, occ};
        }
    }
    return gt;
}

struct SyntheticVideo {
    FrameStore frames;
    GroundTruth truth;
};

inline SyntheticVideo generate_video(const SceneConfig& c, std::uint64_t seed) {
    c.validate();
    SyntheticVideo v;
    v.frames.frames.resize(std::size_t(c.n_frames));
    std::optional<std::vector<float>> bg;
    const bool moving = c.background == BackgroundMode::Scrolling || c.camera_shift != Point2{0, 0};
    if (!moving) bg = render_background(c, {0, 0}, seed);
    parallel_for(std::size_t(c.n_frames), [&](std::size_t t) {
        v.frames.frames[t] = render_frame(c, int(t), seed, bg ? &*bg : nullptr);
    });
    v.truth = scene_ground_truth(c);
    return v;
}

/// Simulated first-stage detector: sparse, mostly precise Initial annotations.
inline AnnotationSet simulate_initializer(const GroundTruth& gt, double coverage_frac, double position_noise_sigma,
                                          double fp_rate, std::uint64_t seed) {
    if (coverage_frac < 0 || coverage_frac > 1) throw std::invalid_argument("simulate_initializer: coverage_frac in [0,1]");
    if (fp_rate < 0 || fp_rate > 1) throw std::invalid_argument("simulate_initializer: fp_rate in [0,1]");
    if (position_noise_sigma < 0) throw std::invalid_argument("simulate_initializer: negative noise");
    AnnotationSet out;
    const int n = gt.n_frames;
    const int k = std::min(n, int(std::ceil(coverage_frac * n - 1e-9)));
    if (k <= 0) return out;
    Rng rng(derive_seed(seed, {std::uint64_t(Stage::Initializer)}));
    std::vector<int> frames(static_cast<std::size_t>(n));
    std::iota(frames.begin(), frames.end(), 0);
    // Partial Fisher-Yates: the first k entries are a uniform sample.
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(frames[std::size_t(i)], frames[std::size_t(pick(rng))]);
    }
    frames.resize(std::size_t(k));
    std::sort(frames.begin(), frames.end());
    std::bernoulli_distribution emit(0.8), false_positive(fp_rate);
    std::normal_distribution<double> noise(0.0, 1.0);
    const FrameSize size = gt.size;
    for (int f : frames)
        for (JointId j : kAllJoints) {
            // Draw every variate unconditionally so streams do not depend on branch outcomes.
            const bool e = emit(rng);
            const bool fp = false_positive(rng);
            const Point2 jitter{noise(rng) * position_noise_sigma, noise(rng) * position_noise_sigma};
            const Point2 uniform{std::uniform_real_distribution<double>(0.0, std::max(0, size.width - 1))(rng),
                                 std::uniform_real_distribution<double>(0.0, std::max(0, size.height - 1))(rng)};
            if (!gt.has(f, j) || gt.occluded(f, j) || !e) continue;
            Point2 p = fp ? uniform : *gt.at(f, j).pos + jitter;
            if (size.width > 0 && size.height > 0) p = size.clamp(p);
            out.insert(make_initial(f, j, p, 1.0));
        }
    return out;
}

namespace detail {

inline Rgb kv_color(const KvTable& t, const std::string& key, Rgb fallback) {
    if (!t.has(key)) return fallback;
    const auto v = t.get_numbers(key, {});
    if (v.size() != 3) throw ConfigError(key, "expected [r, g, b]");
    Rgb c{};
    for (int i = 0; i < 3; ++i) {
        if (v[std::size_t(i)] < 0 || v[std::size_t(i)] > 255) throw ConfigError(key, "color components must lie in 0..255");
        c[std::size_t(i)] = std::uint8_t(v[std::size_t(i)]);
    }
    return c;
}

inline Point2 kv_point(const KvTable& t, const std::string& key, Point2 fallback) {
    if (!t.has(key)) return fallback;
    const auto v = t.get_numbers(key, {});
    if (v.size() != 2) throw ConfigError(key, "expected [x, y]");
    return {v[0], v[1]};
}

inline Oscillation kv_osc(const KvTable& t, const std::string& key, Oscillation fallback) {
    if (!t.has(key)) return fallback;
    const auto v = t.get_numbers(key, {});
    if (v.size() != 4) throw ConfigError(key, "expected [base, amplitude, period, phase]");
    return {v[0], v[1], v[2], v[3]};
}

inline JointId kv_joint(const std::string& key, const std::string& name) {
    auto j = parse_joint(name);
    if (!j) throw ConfigError(key, "unknown joint '" + name + "'");
    return *j;
}

}  // namespace detail

/// Reads `scene.*` keys and `[[scene.occlusion]]` tables on top of the defaults.
inline SceneConfig scene_from_kv(const KvDocument& doc, SceneConfig c = {}) {
    const KvTable& t = doc.root;
    static const char* const known[] = {
        "n_frames", "width", "height", "neck_base", "shoulder_width", "upper_arm", "lower_arm", "torso_length",
        "neck_length", "head_radius", "upper_arm_radius", "lower_arm_radius", "sway", "bob", "camera_shift",
        "left_shoulder", "left_elbow", "right_shoulder", "right_elbow", "background", "scroll", "background_color",
        "shirt_color", "skin_color", "hair_color", "strap_color", "markers", "marker_radius", "marker_colors", "noise_sigma",
        "left_shoulder2", "left_elbow2", "right_shoulder2", "right_elbow2", "illumination", "tint", "distractors"};
    for (const auto& [k, v] : t.values()) {
        if (k.rfind("scene.", 0) != 0) continue;
        const std::string rest = k.substr(6);
        bool ok = false;
        for (const char* name : known) ok = ok || rest == name;
        if (!ok) throw ConfigError(k, "unknown scene key");
    }
    c.n_frames = t.get_int("scene.n_frames", c.n_frames);
    c.width = t.get_int("scene.width", c.width);
    c.height = t.get_int("scene.height", c.height);
    c.neck_base = detail::kv_point(t, "scene.neck_base", c.neck_base);
    c.shoulder_width = t.get_number("scene.shoulder_width", c.shoulder_width);
    c.upper_arm = t.get_number("scene.upper_arm", c.upper_arm);
    c.lower_arm = t.get_number("scene.lower_arm", c.lower_arm);
    c.torso_length = t.get_number("scene.torso_length", c.torso_length);
    c.neck_length = t.get_number("scene.neck_length", c.neck_length);
    c.head_radius = t.get_number("scene.head_radius", c.head_radius);
    c.upper_arm_radius = t.get_number("scene.upper_arm_radius", c.upper_arm_radius);
    c.lower_arm_radius = t.get_number("scene.lower_arm_radius", c.lower_arm_radius);
    c.sway_x = detail::kv_osc(t, "scene.sway", c.sway_x);
    c.bob_y = detail::kv_osc(t, "scene.bob", c.bob_y);
    c.camera_shift = detail::kv_point(t, "scene.camera_shift", c.camera_shift);
    c.left.shoulder = detail::kv_osc(t, "scene.left_shoulder", c.left.shoulder);
    c.left.elbow = detail::kv_osc(t, "scene.left_elbow", c.left.elbow);
    c.right.shoulder = detail::kv_osc(t, "scene.right_shoulder", c.right.shoulder);
    c.right.elbow = detail::kv_osc(t, "scene.right_elbow", c.right.elbow);
    c.left.shoulder2 = detail::kv_osc(t, "scene.left_shoulder2", c.left.shoulder2);
    c.left.elbow2 = detail::kv_osc(t, "scene.left_elbow2", c.left.elbow2);
    c.right.shoulder2 = detail::kv_osc(t, "scene.right_shoulder2", c.right.shoulder2);
    c.right.elbow2 = detail::kv_osc(t, "scene.right_elbow2", c.right.elbow2);
    c.illumination = detail::kv_osc(t, "scene.illumination", c.illumination);
    c.tint = detail::kv_osc(t, "scene.tint", c.tint);
    if (t.has("scene.background")) {
        const std::string b = t.get_string("scene.background", "");
        if (b == "uniform")
            c.background = BackgroundMode::Uniform;
        else if (b == "textured")
            c.background = BackgroundMode::Textured;
        else if (b == "scrolling")
            c.background = BackgroundMode::Scrolling;
        else
            throw ConfigError("scene.background", "expected uniform, textured or scrolling");
    }
    c.scroll = detail::kv_point(t, "scene.scroll", c.scroll);
    c.background_color = detail::kv_color(t, "scene.background_color", c.background_color);
    c.shirt_color = detail::kv_color(t, "scene.shirt_color", c.shirt_color);
    c.skin_color = detail::kv_color(t, "scene.skin_color", c.skin_color);
    c.hair_color = detail::kv_color(t, "scene.hair_color", c.hair_color);
    c.strap_color = detail::kv_color(t, "scene.strap_color", c.strap_color);
    if (t.has("scene.markers")) {
        const auto names = t.get_strings("scene.markers", {});
        const double radius = t.get_number("scene.marker_radius", 7.0);
        const auto flat = t.get_numbers("scene.marker_colors", {});
        if (!flat.empty() && flat.size() != names.size() * 3)
            throw ConfigError("scene.marker_colors", "expected three components per marker");
        std::vector<Marker> ms;
        for (std::size_t i = 0; i < names.size(); ++i) {
            Marker m;
            m.joint = detail::kv_joint("scene.markers", names[i]);
            m.radius = radius;
            // Default palette: warm for left joints, cool for right ones.
            const bool left = names[i].front() == 'L';
            m.color = left ? Rgb{230, 40, 40} : Rgb{40, 90, 230};
            if (!flat.empty())
                for (int k = 0; k < 3; ++k) m.color[std::size_t(k)] = std::uint8_t(std::clamp(flat[i * 3 + std::size_t(k)], 0.0, 255.0));
            ms.push_back(m);
        }
        c.markers = std::move(ms);
    } else if (t.has("scene.marker_radius")) {
        for (auto& m : c.markers) m.radius = t.get_number("scene.marker_radius", m.radius);
    }
    c.noise_sigma = t.get_number("scene.noise_sigma", c.noise_sigma);
    // `scene.distractors = "none"` clears the default set; [[scene.distractor]] tables replace it.
    if (t.has("scene.distractors")) {
        if (t.get_string("scene.distractors", "") != "none") throw ConfigError("scene.distractors", "only \"none\" is accepted");
        c.distractors.clear();
    }
    if (auto it = doc.table_arrays.find("scene.distractor"); it != doc.table_arrays.end()) {
        c.distractors.clear();
        for (const auto& o : it->second) {
            Distractor d;
            d.color = detail::kv_color(o, "color", d.color);
            d.radius = o.get_number("radius", d.radius);
            d.x = detail::kv_osc(o, "x", d.x);
            d.y = detail::kv_osc(o, "y", d.y);
            c.distractors.push_back(d);
        }
    }
    if (auto it = doc.table_arrays.find("scene.occlusion"); it != doc.table_arrays.end()) {
        for (const auto& o : it->second) {
            OcclusionEvent e;
            e.first = o.get_int("first", 0);
            e.last = o.get_int("last", e.first);
            for (const auto& name : o.get_strings("joints", {})) e.joints.push_back(detail::kv_joint("scene.occlusion.joints", name));
            e.anchored = o.get_bool("anchored", false);
            const auto size = o.get_numbers("size", {e.w, e.h});
            if (size.size() != 2) throw ConfigError("scene.occlusion.size", "expected [w, h]");
            e.w = size[0];
            e.h = size[1];
            if (o.has("rect")) {
                const auto r = o.get_numbers("rect", {});
                if (r.size() != 4) throw ConfigError("scene.occlusion.rect", "expected [x, y, w, h]");
                e.x = r[0];
                e.y = r[1];
                e.w = r[2];
                e.h = r[3];
            } else if (!e.anchored) {
                throw ConfigError("scene.occlusion.rect", "needs a rect or anchored = true");
            }
            e.color = detail::kv_color(o, "color", e.color);
            c.occlusions.push_back(e);
        }
    }
    c.validate();
    return c;
}

}  // namespace vidpose
