#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gofi/roadmap.hpp"

namespace gofi::build {

inline std::vector<Vec2> straight(Vec2 a, Vec2 b, double step = 1.0) {
    const auto n = std::max(1, static_cast<int>(std::ceil(distance(a, b) / step)));
    std::vector<Vec2> pts;
    for (int i = 0; i <= n; ++i) {
        pts.push_back(a + (b - a) * (static_cast<double>(i) / n));
    }
    return pts;
}

inline std::vector<Vec2> arc(Vec2 center, double radius, double a0, double a1, double spacing = 0.5) {
    const auto n = std::max(2, static_cast<int>(std::round(std::abs(a1 - a0) * radius / spacing)));
    std::vector<Vec2> pts;
    for (int i = 0; i <= n; ++i) {
        const double a = a0 + (a1 - a0) * static_cast<double>(i) / n;
        pts.push_back(center + Vec2{std::cos(a), std::sin(a)} * radius);
    }
    return pts;
}

inline Lane lane(std::string id, std::vector<Vec2> pts, std::vector<std::string> succ = {}, double limit = 10.0) {
    Lane l;
    l.id = std::move(id);
    l.centerline = Polyline(std::move(pts));
    l.successors = std::move(succ);
    l.speed_limit = limit;
    return l;
}

inline void pair_lanes(Lane& left, Lane& right) {
    left.right_neighbor = right.id;
    right.left_neighbor = left.id;
}

inline Lane& find_lane(std::vector<Lane>& lanes, const std::string& id) {
    return *std::find_if(lanes.begin(), lanes.end(), [&](const Lane& l) { return l.id == id; });
}

}  // namespace gofi::build
