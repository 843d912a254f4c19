#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace gofi {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr bool operator==(const Vec2&) const = default;

    double norm() const { return std::hypot(x, y); }
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }
inline Vec2 unit_from_heading(double heading) { return {std::cos(heading), std::sin(heading)}; }

/// Wraps an angle into [-pi, pi).
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a + std::numbers::pi, two_pi);
    if (a < 0.0) {
        a += two_pi;
    }
    return a - std::numbers::pi;
}

using Polygon = std::vector<Vec2>;

/// Rectangle centred at `center`, rotated by `heading`, corners in CCW order.
Polygon oriented_box(Vec2 center, double heading, double length, double width);

/// True when the open segment a->b touches the interior or boundary of a convex polygon.
bool segment_intersects_convex(Vec2 a, Vec2 b, std::span<const Vec2> poly);

/// Separating-axis overlap test for two convex polygons. Touching counts as overlap.
bool convex_overlap(std::span<const Vec2> p, std::span<const Vec2> q);

bool point_in_convex(Vec2 p, std::span<const Vec2> poly);

}  // namespace gofi
