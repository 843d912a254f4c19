#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gofi/geometry.hpp"
#include "gofi/polyline.hpp"

namespace gofi {

/// Global physics step. Control runs at 1 Hz, i.e. every 10 steps.
inline constexpr double kDt = 0.1;

struct VehicleState {
    Vec2 position;
    double heading = 0.0;
    double speed = 0.0;
    double acceleration = 0.0;

    bool operator==(const VehicleState&) const = default;
};

struct JointState {
    std::map<std::string, VehicleState> vehicles;
    double timestamp = 0.0;
};

struct BodyBox {
    double length = 4.0;
    double width = 1.8;
};

inline constexpr BodyBox kCarBox{4.0, 1.8};
inline constexpr BodyBox kPedestrianBox{0.6, 0.6};

struct DynamicLimits {
    double v_max = 14.0;
    double a_min = -5.0;
    double a_max = 3.0;
};

class TrajectoryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Time-indexed sequence of states sampled every `dt` seconds from `start_time`.
struct Trajectory {
    std::string vehicle_id;
    double dt = kDt;
    double start_time = 0.0;
    std::vector<VehicleState> states;

    double duration() const { return states.empty() ? 0.0 : dt * static_cast<double>(states.size() - 1); }
    double end_time() const { return start_time + duration(); }
    const VehicleState& back() const { return states.back(); }
    double path_length() const;
    /// Index of the sample nearest to absolute time t, if inside the covered range.
    std::optional<std::size_t> index_at(double t) const;
    /// Positions consistent with trapezoidal speed integration to within 20% (plus 1 cm).
    bool kinematically_consistent() const;
};

/// Speed after one step of `accel_cmd`, clamped to [0, v_max].
double advance_speed(double speed, double accel_cmd, double dt, const DynamicLimits& limits = {});

/// Path-following point kinematics: the speed integrates the command, the position
/// moves along the frame tangent by the trapezoidal distance, heading snaps to the tangent.
VehicleState step(const VehicleState& state, double accel_cmd, const Frame& path_frame, double dt,
                  const DynamicLimits& limits = {});

Trajectory concat(const Trajectory& prefix, const Trajectory& suffix);

Polygon body_polygon(const VehicleState& s, BodyBox box, double inflate = 0.0);
bool collides(const VehicleState& a, BodyBox box_a, const VehicleState& b, BodyBox box_b);
/// First index of `a` (time-aligned with `b`) at which the bodies overlap.
std::optional<std::size_t> trajectory_collision(const Trajectory& a, BodyBox box_a, const Trajectory& b, BodyBox box_b);

void write_trajectory_csv_header(std::ostream& out);
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace gofi
