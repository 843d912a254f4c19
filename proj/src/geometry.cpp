#include "gofi/geometry.hpp"

#include <algorithm>
#include <limits>

namespace gofi {
namespace {

// Sign of the winding so containment works for either vertex order.
double orientation(std::span<const Vec2> poly) {
    double area = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        area += cross(poly[i], poly[(i + 1) % poly.size()]);
    }
    return area >= 0.0 ? 1.0 : -1.0;
}

bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
    const Vec2 r = p2 - p1;
    const Vec2 s = q2 - q1;
    const double denom = cross(r, s);
    const Vec2 qp = q1 - p1;
    constexpr double eps = 1e-12;
    if (std::abs(denom) < eps) {
        if (std::abs(cross(qp, r)) > eps) {
            return false;
        }
        // Collinear: compare projections.
        const double rr = dot(r, r);
        if (rr < eps) {
            return distance(p1, q1) < eps;
        }
        double t0 = dot(qp, r) / rr;
        double t1 = t0 + dot(s, r) / rr;
        if (t0 > t1) {
            std::swap(t0, t1);
        }
        return t1 >= 0.0 && t0 <= 1.0;
    }
    const double t = cross(qp, s) / denom;
    const double u = cross(qp, r) / denom;
    return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

}  // namespace

Polygon oriented_box(Vec2 center, double heading, double length, double width) {
    const Vec2 f = unit_from_heading(heading) * (0.5 * length);
    const Vec2 l = Vec2{-std::sin(heading), std::cos(heading)} * (0.5 * width);
    return {center + f - l, center + f + l, center - f + l, center - f - l};
}

bool point_in_convex(Vec2 p, std::span<const Vec2> poly) {
    if (poly.size() < 3) {
        return false;
    }
    const double sign = orientation(poly);
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[(i + 1) % poly.size()];
        if (sign * cross(b - a, p - a) < 0.0) {
            return false;
        }
    }
    return true;
}

bool segment_intersects_convex(Vec2 a, Vec2 b, std::span<const Vec2> poly) {
    if (poly.size() < 3) {
        return false;
    }
    if (point_in_convex(a, poly) || point_in_convex(b, poly)) {
        return true;
    }
    for (std::size_t i = 0; i < poly.size(); ++i) {
        if (segments_intersect(a, b, poly[i], poly[(i + 1) % poly.size()])) {
            return true;
        }
    }
    return false;
}

bool convex_overlap(std::span<const Vec2> p, std::span<const Vec2> q) {
    auto separated_on_edges_of = [](std::span<const Vec2> a, std::span<const Vec2> b) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            const Vec2 e = a[(i + 1) % a.size()] - a[i];
            const Vec2 axis{-e.y, e.x};
            double amin = std::numeric_limits<double>::infinity();
            double amax = -amin;
            double bmin = amin;
            double bmax = -amin;
            for (Vec2 v : a) {
                const double d = dot(v, axis);
                amin = std::min(amin, d);
                amax = std::max(amax, d);
            }
            for (Vec2 v : b) {
                const double d = dot(v, axis);
                bmin = std::min(bmin, d);
                bmax = std::max(bmax, d);
            }
            if (amax < bmin || bmax < amin) {
                return true;
            }
        }
        return false;
    };
    return !separated_on_edges_of(p, q) && !separated_on_edges_of(q, p);
}

}  // namespace gofi
