#pragma once

#include <cstddef>
#include <vector>

#include "gofi/geometry.hpp"

namespace gofi {

struct Frame {
    Vec2 point;
    double heading = 0.0;
    double curvature = 0.0;
};

struct Projection {
    double arclength = 0.0;
    double lateral = 0.0;  // positive to the left of travel direction
    std::size_t segment = 0;
    double distance = 0.0;
};

/// Piecewise-linear curve parameterised by arclength.
class Polyline {
public:
    Polyline() = default;
    explicit Polyline(std::vector<Vec2> points);

    const std::vector<Vec2>& points() const { return points_; }
    double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
    bool empty() const { return points_.empty(); }

    Vec2 point_at(double s) const;
    double heading_at(double s) const;
    /// Three-point circle curvature from samples at s-h, s, s+h (signed, left positive).
    double curvature_at(double s, double h = 0.5) const;
    Frame frame_at(double s) const;

    Projection project(Vec2 p) const;
    /// Projection restricted to segments [first, last].
    Projection project(Vec2 p, std::size_t first, std::size_t last) const;

    std::size_t segment_count() const { return points_.size() < 2 ? 0 : points_.size() - 1; }
    std::size_t segment_at(double s) const;

    /// Uniform resampling at `step` meters, always keeping the final point.
    Polyline resampled(double step) const;

private:
    std::vector<Vec2> points_;
    std::vector<double> cumulative_;
};

}  // namespace gofi
