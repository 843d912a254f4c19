#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gofi/kinematics.hpp"
#include "gofi/maneuvers.hpp"
#include "gofi/roadmap.hpp"

namespace gofi {

class PlannerError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct CostWeights {
    double w_time = 1.0;
    double w_accel = 0.1;
    double w_jerk = 0.05;
    double w_curvature = 0.05;

    /// Throws PlannerError when a weight is negative or all are zero.
    void validate() const;
};

/// Presence bits over the map's occlusion sites; bit j set means an entity occupies site j.
struct OccludedFactorInstantiation {
    std::vector<bool> bits;

    static OccludedFactorInstantiation from_index(std::uint32_t index, std::size_t k);
    std::uint32_t index() const;
    std::size_t present_count() const;
    std::string label() const;  // e.g. "01"; "-" for k = 0
    bool operator==(const OccludedFactorInstantiation&) const = default;
};

/// All 2^k instantiations in index order.
std::vector<OccludedFactorInstantiation> all_instantiations(std::size_t k);

struct PlanResult {
    Trajectory trajectory;
    double cost = 0.0;
    std::vector<MacroAction> macro_sequence;
};

struct PlannerOptions {
    int max_depth = 4;
    ManeuverParams params;
    /// Horizon of hypothesised entity predictions, measured from scenario start.
    double prediction_horizon = 130.0;
};

/// Mean-based trajectory cost: time plus averaged |a|, |jerk| and |curvature|.
double cost_of(const Trajectory& traj, const CostWeights& weights);

/// Predicted motion of an entity at `site`, starting at scenario time 0.
Trajectory hypothesis_prediction(const OccludedSiteDef& site, double horizon, const RoadMap& map);

/// Agents present under `z`, each following its site's predicted motion.
std::vector<OtherAgent> instantiate_entities(const RoadMap& map, const OccludedFactorInstantiation& z,
                                             double horizon = 130.0);

/// Minimum-cost macro sequence (length <= max_depth) from `start` at `start_time` into the goal region,
/// treating z's entities and `traffic` as agents the vehicle reacts to. nullopt when the goal is unreachable.
std::optional<PlanResult> plan_optimal(const VehicleState& start, double start_time, const GoalDef& goal,
                                       const OccludedFactorInstantiation& z, const RoadMap& map,
                                       const CostWeights& weights, const PlannerOptions& options = {},
                                       std::span<const OtherAgent> traffic = {}, const std::string& vehicle_id = "v");

/// Same search over an explicit agent set, without the z lookup.
std::optional<PlanResult> plan_with_agents(const VehicleState& start, double start_time, const GoalDef& goal,
                                           std::span<const OtherAgent> agents, const RoadMap& map,
                                           const CostWeights& weights, const PlannerOptions& options = {},
                                           const std::string& vehicle_id = "v");

}  // namespace gofi
