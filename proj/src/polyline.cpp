#include "gofi/polyline.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace gofi {

Polyline::Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
    cumulative_.reserve(points_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (i > 0) {
            acc += distance(points_[i - 1], points_[i]);
        }
        cumulative_.push_back(acc);
    }
}

std::size_t Polyline::segment_at(double s) const {
    if (points_.size() < 2) {
        return 0;
    }
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    std::size_t idx = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    return std::min(idx, points_.size() - 2);
}

Vec2 Polyline::point_at(double s) const {
    if (points_.empty()) {
        throw std::logic_error("point_at on empty polyline");
    }
    if (points_.size() == 1) {
        return points_.front();
    }
    s = std::clamp(s, 0.0, length());
    const std::size_t i = segment_at(s);
    const double seg = cumulative_[i + 1] - cumulative_[i];
    const double u = seg > 0.0 ? (s - cumulative_[i]) / seg : 0.0;
    return points_[i] + (points_[i + 1] - points_[i]) * u;
}

double Polyline::heading_at(double s) const {
    if (points_.size() < 2) {
        return 0.0;
    }
    const std::size_t i = segment_at(std::clamp(s, 0.0, length()));
    const Vec2 d = points_[i + 1] - points_[i];
    return wrap_angle(std::atan2(d.y, d.x));
}

double Polyline::curvature_at(double s, double h) const {
    if (points_.size() < 3 || length() < 2.0 * h) {
        return 0.0;
    }
    const double mid = std::clamp(s, h, length() - h);
    const Vec2 a = point_at(mid - h);
    const Vec2 b = point_at(mid);
    const Vec2 c = point_at(mid + h);
    const double ab = distance(a, b);
    const double bc = distance(b, c);
    const double ca = distance(c, a);
    const double denom = ab * bc * ca;
    if (denom < 1e-12) {
        return 0.0;
    }
    return 2.0 * cross(b - a, c - a) / denom;
}

Frame Polyline::frame_at(double s) const {
    return {point_at(s), heading_at(s), curvature_at(s)};
}

Projection Polyline::project(Vec2 p) const {
    return project(p, 0, segment_count() == 0 ? 0 : segment_count() - 1);
}

Projection Polyline::project(Vec2 p, std::size_t first, std::size_t last) const {
    Projection best;
    best.distance = std::numeric_limits<double>::infinity();
    if (points_.size() < 2) {
        if (!points_.empty()) {
            best.distance = distance(p, points_.front());
        }
        return best;
    }
    last = std::min(last, points_.size() - 2);
    for (std::size_t i = first; i <= last; ++i) {
        const Vec2 a = points_[i];
        const Vec2 d = points_[i + 1] - a;
        const double len2 = dot(d, d);
        double u = len2 > 0.0 ? dot(p - a, d) / len2 : 0.0;
        u = std::clamp(u, 0.0, 1.0);
        const Vec2 q = a + d * u;
        const double dist = distance(p, q);
        if (dist < best.distance) {
            best.distance = dist;
            best.segment = i;
            best.arclength = cumulative_[i] + u * std::sqrt(len2);
            const double side = cross(d, p - a);
            best.lateral = side >= 0.0 ? dist : -dist;
        }
    }
    return best;
}

Polyline Polyline::resampled(double step) const {
    if (points_.size() < 2) {
        return *this;
    }
    std::vector<Vec2> out;
    const double total = length();
    const auto n = static_cast<std::size_t>(std::floor(total / step));
    out.reserve(n + 2);
    for (std::size_t i = 0; i <= n; ++i) {
        out.push_back(point_at(static_cast<double>(i) * step));
    }
    if (total - static_cast<double>(n) * step > 1e-6) {
        out.push_back(points_.back());
    }
    return Polyline(std::move(out));
}

}  // namespace gofi
