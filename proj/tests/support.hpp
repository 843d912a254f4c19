#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "gofi/kinematics.hpp"
#include "gofi/roadmap.hpp"

namespace gofi::testing {

inline std::vector<Vec2> straight_points(Vec2 a, Vec2 b, double step = 1.0) {
    const double len = distance(a, b);
    const auto n = static_cast<int>(std::ceil(len / step));
    std::vector<Vec2> pts;
    for (int i = 0; i <= n; ++i) {
        pts.push_back(a + (b - a) * (static_cast<double>(i) / n));
    }
    return pts;
}

/// Points on a circular arc with vertices `chord` apart along the circle.
inline std::vector<Vec2> arc_points(Vec2 center, double radius, double a0, double a1, double spacing = 0.5) {
    const double span = std::abs(a1 - a0) * radius;
    const auto n = std::max(2, static_cast<int>(std::round(span / spacing)));
    std::vector<Vec2> pts;
    for (int i = 0; i <= n; ++i) {
        const double a = a0 + (a1 - a0) * static_cast<double>(i) / n;
        pts.push_back(center + Vec2{std::cos(a), std::sin(a)} * radius);
    }
    return pts;
}

inline Lane make_lane(std::string id, std::vector<Vec2> pts, double limit = 10.0, std::vector<std::string> succ = {}) {
    Lane l;
    l.id = std::move(id);
    l.centerline = Polyline(std::move(pts));
    l.speed_limit = limit;
    l.successors = std::move(succ);
    return l;
}

/// Single straight lane along +x from 0 to `length`, goal at the end.
inline RoadMap straight_road(double length = 100.0, double limit = 10.0) {
    std::vector<Lane> lanes{make_lane("A", straight_points({0, 0}, {length, 0}), limit)};
    std::vector<GoalDef> goals{GoalDef{"end", {length - 1.0, 0}, 0.0, 2.0}};
    return RoadMap(std::move(lanes), std::move(goals), {}, {});
}

/// Two parallel lanes along +x; "R" at y=0, "L" at y=3.5.
inline RoadMap two_lane_road(double length = 150.0, double limit = 10.0) {
    Lane r = make_lane("R", straight_points({0, 0}, {length, 0}), limit);
    Lane l = make_lane("L", straight_points({0, 3.5}, {length, 3.5}), limit);
    r.left_neighbor = "L";
    l.right_neighbor = "R";
    std::vector<GoalDef> goals{GoalDef{"end_r", {length - 1.0, 0}, 0.0, 2.0},
                               GoalDef{"end_l", {length - 1.0, 3.5}, 0.0, 2.0}};
    return RoadMap({r, l}, std::move(goals), {}, {});
}

inline VehicleState at(double x, double y, double heading = 0.0, double speed = 0.0) {
    VehicleState s;
    s.position = {x, y};
    s.heading = heading;
    s.speed = speed;
    return s;
}

/// Trajectory holding one pose for `seconds`.
inline Trajectory parked(std::string id, VehicleState s, double seconds, double start_time = 0.0) {
    Trajectory t;
    t.vehicle_id = std::move(id);
    t.start_time = start_time;
    const auto n = static_cast<int>(std::llround(seconds / kDt));
    s.speed = 0.0;
    s.acceleration = 0.0;
    t.states.assign(static_cast<std::size_t>(n + 1), s);
    return t;
}

/// Straight-line constant-velocity trajectory.
inline Trajectory cruising(std::string id, Vec2 p0, double heading, double speed, double seconds, double start_time = 0.0) {
    Trajectory t;
    t.vehicle_id = std::move(id);
    t.start_time = start_time;
    const auto n = static_cast<int>(std::llround(seconds / kDt));
    for (int i = 0; i <= n; ++i) {
        VehicleState s;
        s.position = p0 + unit_from_heading(heading) * (speed * kDt * i);
        s.heading = heading;
        s.speed = speed;
        t.states.push_back(s);
    }
    return t;
}

// Two-lane road in 60 m and 35 m chunks; the right lane can also exit right. A goal down each branch.
inline RoadMap toy_map() {
    Lane r = make_lane("R", straight_points({0, 0}, {60, 0}), 10.0, {"R2", "X"});
    Lane l = make_lane("L", straight_points({0, 3.5}, {60, 3.5}), 10.0, {"L2"});
    Lane r2 = make_lane("R2", straight_points({60, 0}, {95, 0}), 10.0, {"R3"});
    Lane l2 = make_lane("L2", straight_points({60, 3.5}, {95, 3.5}), 10.0, {"L3"});
    Lane r3 = make_lane("R3", straight_points({95, 0}, {130, 0}));
    Lane l3 = make_lane("L3", straight_points({95, 3.5}, {130, 3.5}));
    for (auto* pair : {&r, &r2, &r3}) {
        pair->left_neighbor = "L" + pair->id.substr(1);
    }
    for (auto* pair : {&l, &l2, &l3}) {
        pair->right_neighbor = "R" + pair->id.substr(1);
    }
    Lane x = make_lane("X", arc_points({60, -12}, 12.0, std::numbers::pi / 2.0, 0.0), 8.0, {"S"});
    Lane s = make_lane("S", straight_points({72, -12}, {72, -60}));
    std::vector<GoalDef> goals{GoalDef{"east_r", {125, 0}, 0.0, 2.0}, GoalDef{"east_l", {125, 3.5}, 0.0, 2.0},
                               GoalDef{"south", {72, -50}, 0.0, 2.0}};
    OccludedSiteDef parked_car{"blocker", {85, 0}, 0.0, Stationary{}, 4.0, 1.8};
    return RoadMap({r, l, r2, l2, r3, l3, x, s}, goals, {parked_car}, {});
}


}  // namespace gofi::testing
