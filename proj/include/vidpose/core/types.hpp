#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>

namespace vidpose {

enum class JointId : std::uint8_t { Head, LShoulder, RShoulder, LElbow, RElbow, LWrist, RWrist };

inline constexpr std::size_t kJointCount = 7;

inline constexpr std::array<JointId, kJointCount> kAllJoints = {
    JointId::Head,   JointId::LShoulder, JointId::RShoulder, JointId::LElbow,
    JointId::RElbow, JointId::LWrist,    JointId::RWrist};

constexpr std::size_t index_of(JointId j) noexcept { return static_cast<std::size_t>(j); }

constexpr std::string_view joint_name(JointId j) noexcept {
    constexpr std::array<std::string_view, kJointCount> names = {
        "Head", "LShoulder", "RShoulder", "LElbow", "RElbow", "LWrist", "RWrist"};
    return names[index_of(j)];
}

constexpr std::optional<JointId> parse_joint(std::string_view s) noexcept {
    for (JointId j : kAllJoints)
        if (joint_name(j) == s) return j;
    return std::nullopt;
}

/// Left/right swap partner; Head maps to itself.
constexpr JointId mirror(JointId j) noexcept {
    switch (j) {
        case JointId::LShoulder: return JointId::RShoulder;
        case JointId::RShoulder: return JointId::LShoulder;
        case JointId::LElbow: return JointId::RElbow;
        case JointId::RElbow: return JointId::LElbow;
        case JointId::LWrist: return JointId::RWrist;
        case JointId::RWrist: return JointId::LWrist;
        default: return j;
    }
}

enum class ArmSide : std::uint8_t { Left, Right };

constexpr JointId elbow_of(ArmSide s) noexcept {
    return s == ArmSide::Left ? JointId::LElbow : JointId::RElbow;
}
constexpr JointId wrist_of(ArmSide s) noexcept {
    return s == ArmSide::Left ? JointId::LWrist : JointId::RWrist;
}
constexpr ArmSide opposite(ArmSide s) noexcept {
    return s == ArmSide::Left ? ArmSide::Right : ArmSide::Left;
}

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Point2 operator+(Point2 a, Point2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Point2 operator-(Point2 a, Point2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Point2 operator*(Point2 a, double s) noexcept { return {a.x * s, a.y * s}; }
    friend constexpr Point2 operator*(double s, Point2 a) noexcept { return {a.x * s, a.y * s}; }
    friend constexpr bool operator==(Point2 a, Point2 b) noexcept = default;

    double norm() const noexcept { return std::hypot(x, y); }
    bool finite() const noexcept { return std::isfinite(x) && std::isfinite(y); }
};

inline double distance(Point2 a, Point2 b) noexcept { return (a - b).norm(); }

/// Frame geometry used for bounds checks; positions are valid in [0, w-1] x [0, h-1].
struct FrameSize {
    int width = 0;
    int height = 0;

    bool contains(Point2 p) const noexcept {
        return p.finite() && p.x >= 0.0 && p.y >= 0.0 && p.x <= width - 1 && p.y <= height - 1;
    }
    Point2 clamp(Point2 p) const noexcept {
        return {std::clamp(p.x, 0.0, double(width - 1)), std::clamp(p.y, 0.0, double(height - 1))};
    }
    friend constexpr bool operator==(FrameSize, FrameSize) noexcept = default;
};

}  // namespace vidpose
