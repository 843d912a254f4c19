#include "gofi/kinematics.hpp"

#include <algorithm>
#include <cmath>

namespace gofi {

double Trajectory::path_length() const {
    double total = 0.0;
    for (std::size_t i = 1; i < states.size(); ++i) {
        total += distance(states[i - 1].position, states[i].position);
    }
    return total;
}

std::optional<std::size_t> Trajectory::index_at(double t) const {
    if (states.empty()) {
        return std::nullopt;
    }
    const double rel = (t - start_time) / dt;
    const auto idx = static_cast<long long>(std::llround(rel));
    if (idx < 0 || idx >= static_cast<long long>(states.size())) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(idx);
}

bool Trajectory::kinematically_consistent() const {
    for (std::size_t i = 1; i < states.size(); ++i) {
        const double moved = distance(states[i - 1].position, states[i].position);
        const double expected = 0.5 * (states[i - 1].speed + states[i].speed) * dt;
        if (std::abs(moved - expected) > 0.2 * expected + 0.01) {
            return false;
        }
    }
    return true;
}

double advance_speed(double speed, double accel_cmd, double dt, const DynamicLimits& limits) {
    const double a = std::clamp(accel_cmd, limits.a_min, limits.a_max);
    return std::clamp(speed + a * dt, 0.0, limits.v_max);
}

VehicleState step(const VehicleState& state, double accel_cmd, const Frame& path_frame, double dt,
                  const DynamicLimits& limits) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("step: dt must be positive");
    }
    VehicleState next;
    next.speed = advance_speed(state.speed, accel_cmd, dt, limits);
    next.acceleration = (next.speed - state.speed) / dt;
    const double travelled = 0.5 * (state.speed + next.speed) * dt;
    next.heading = wrap_angle(path_frame.heading);
    next.position = state.position + unit_from_heading(path_frame.heading) * travelled;
    return next;
}

Trajectory concat(const Trajectory& prefix, const Trajectory& suffix) {
    if (prefix.vehicle_id != suffix.vehicle_id) {
        throw TrajectoryError("concat: vehicle ids differ ('" + prefix.vehicle_id + "' vs '" + suffix.vehicle_id + "')");
    }
    if (std::abs(prefix.dt - suffix.dt) > 1e-12) {
        throw TrajectoryError("concat: timesteps differ");
    }
    if (prefix.states.empty() || suffix.states.empty()) {
        throw TrajectoryError("concat: empty trajectory");
    }
    if (distance(prefix.back().position, suffix.states.front().position) > 0.5) {
        throw TrajectoryError("concat: suffix does not start at the end of the prefix");
    }
    Trajectory out = prefix;
    out.states.insert(out.states.end(), suffix.states.begin() + 1, suffix.states.end());
    return out;
}

Polygon body_polygon(const VehicleState& s, BodyBox box, double inflate) {
    return oriented_box(s.position, s.heading, box.length + 2.0 * inflate, box.width + 2.0 * inflate);
}

bool collides(const VehicleState& a, BodyBox box_a, const VehicleState& b, BodyBox box_b) {
    const double reach = 0.5 * (std::hypot(box_a.length, box_a.width) + std::hypot(box_b.length, box_b.width));
    if (distance(a.position, b.position) > reach) {
        return false;
    }
    return convex_overlap(body_polygon(a, box_a), body_polygon(b, box_b));
}

std::optional<std::size_t> trajectory_collision(const Trajectory& a, BodyBox box_a, const Trajectory& b, BodyBox box_b) {
    if (std::abs(a.dt - b.dt) > 1e-12) {
        throw TrajectoryError("trajectory_collision: timesteps differ");
    }
    const auto offset = static_cast<long long>(std::llround((a.start_time - b.start_time) / a.dt));
    for (std::size_t i = 0; i < a.states.size(); ++i) {
        const long long j = static_cast<long long>(i) + offset;
        if (j < 0) {
            continue;
        }
        if (j >= static_cast<long long>(b.states.size())) {
            break;
        }
        if (collides(a.states[i], box_a, b.states[static_cast<std::size_t>(j)], box_b)) {
            return i;
        }
    }
    return std::nullopt;
}

void write_trajectory_csv_header(std::ostream& out) { out << "t,vehicle_id,x,y,heading,speed,accel\n"; }

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const VehicleState& s = traj.states[i];
        out << traj.start_time + traj.dt * static_cast<double>(i) << ',' << traj.vehicle_id << ',' << s.position.x << ','
            << s.position.y << ',' << s.heading << ',' << s.speed << ',' << s.acceleration << '\n';
    }
}

}  // namespace gofi
