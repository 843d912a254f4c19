#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gofi/kinematics.hpp"
#include "gofi/polyline.hpp"
#include "gofi/roadmap.hpp"

namespace gofi {

class ManeuverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ManeuverKind { follow_lane, lane_change, turn, stop, give_way };
enum class Side { left, right };

/// One primitive. Lane bindings are resolved when a macro is instantiated at a state.
struct Maneuver {
    ManeuverKind kind = ManeuverKind::follow_lane;
    double distance = 0.0;  // follow_lane; +inf follows to the lane end
    Side direction = Side::left;  // lane_change
    std::string lane;  // lane the maneuver runs on (connector for turn, target for lane_change)
    double from_s = 0.0;
    double to_s = 0.0;
    double duration = 0.0;  // stop
    std::vector<std::string> watch_lanes;  // give_way
};

struct MacroAction {
    std::string name;
    std::vector<Maneuver> maneuvers;
};

struct VelocityProfile {
    std::vector<std::pair<double, double>> samples;  // (arclength, target speed)
};

/// Another road user the controller reacts to, or a hazard it only collides with.
struct OtherAgent {
    Trajectory trajectory;
    BodyBox box = kCarBox;
};

struct ManeuverParams {
    double lane_change_length = 20.0;
    double lateral_accel_max = 2.0;
    double comfort_decel = 2.0;
    double speed_gain = 1.0;
    double time_headway = 2.0;
    double standstill_gap = 4.0;
    double acc_gain = 1.5;
    double give_way_margin = 2.0;
    double conflict_margin = 1.0;
    double conflict_horizon = 8.0;
    double stop_decel = 3.0;
    double stop_duration = 2.0;
    double max_duration = 60.0;
    DynamicLimits limits;
    BodyBox body = kCarBox;
};

enum class RolloutStatus { completed, goal_reached, collision, timed_out };

struct RolloutOptions {
    double start_time = 0.0;
    const GoalDef* goal = nullptr;
    std::span<const OtherAgent> others;   // reacted to by the controller and collision-checked
    std::span<const OtherAgent> hazards;  // collision-checked only
    std::string vehicle_id = "ego";
    ManeuverParams params;
    /// Stops after this many steps with status completed; 0 runs the macro to its end.
    std::size_t step_limit = 0;
    /// When false, contacts with others or hazards are ignored instead of ending the rollout.
    bool stop_on_collision = true;
};

struct RolloutResult {
    Trajectory trajectory;
    RolloutStatus status = RolloutStatus::completed;
    std::optional<std::size_t> collision_index;
};

/// The fixed library, in lexicographic order.
const std::vector<std::string>& macro_library();

/// Resolves a library macro at a state, or nullopt when its preconditions fail.
std::optional<MacroAction> instantiate_macro(std::string_view name, const VehicleState& state, const RoadMap& map,
                                             const ManeuverParams& params = {});

bool applicable(const MacroAction& macro, const VehicleState& state, const RoadMap& map,
                const ManeuverParams& params = {});

VelocityProfile velocity_profile(const Maneuver& maneuver, const RoadMap& map, const ManeuverParams& params = {});

/// Closed-loop rollout of a macro; never throws for collisions or timeouts, which are reported in the status.
RolloutResult rollout(const MacroAction& macro, const VehicleState& start, const RoadMap& map, const RolloutOptions& options);

/// Closed-loop expansion. Throws ManeuverError if the macro is inapplicable or does not terminate.
Trajectory expand(const MacroAction& macro, const VehicleState& start, const RoadMap& map,
                  std::span<const OtherAgent> others, const ManeuverParams& params = {});

/// Cubic smoothstep used for lateral blends: 0 at u<=0, 1 at u>=1.
double smoothstep(double u);

}  // namespace gofi
