#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gofi/inference.hpp"
#include "gofi/mcts.hpp"

namespace gofi {

class ScenarioError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Perception { blind, geometric };
enum class Role { ego, observed, occluded, pedestrian };
enum class VisibilityRule { none, vehicle_shadow, overtake_trigger, building };

Perception parse_perception(const std::string& name);
std::string perception_name(Perception p);

struct ScenarioAgent {
    std::string id;
    Role role = Role::observed;
    VehicleState initial;
    BodyBox box = kCarBox;
    std::string goal;                 // true goal of an observed vehicle
    std::optional<std::size_t> site;  // occlusion site of an occluded entity
};

struct Scenario {
    std::string id;
    std::uint64_t seed = 0;
    RoadMap map;
    GoalDef ego_goal;
    std::vector<ScenarioAgent> agents;  // the ego first
    OccludedFactorInstantiation true_z;
    Perception perception = Perception::blind;
    VisibilityRule visibility = VisibilityRule::none;
    double duration = 60.0;

    const ScenarioAgent& ego() const { return agents.front(); }
    std::vector<const ScenarioAgent*> observed() const;
};

/// Known scenario ids in presentation order: 1, 2, 3, 4, 2v, 4v.
const std::vector<std::string>& scenario_ids();

/// Road layout of a scenario with nominal occlusion sites.
RoadMap scenario_map(const std::string& id);

/// Seeded scenario instance; equal (id, seed) pairs give identical scenarios.
Scenario build_scenario(const std::string& id, std::uint64_t seed, Perception perception = Perception::blind);

/// Straight-ahead prediction at constant speed along the agent's lane, or its heading off-road.
OtherAgent constant_velocity_prediction(const std::string& id, const VehicleState& state, double t, double horizon,
                                        const RoadMap& map, BodyBox box);

struct Control {
    double accel = 0.0;
    Frame path_frame;
};

struct WorldStep {
    JointState world;
    std::vector<std::string> ego_collisions;
};

/// One physics step for every vehicle; reports overlaps between the ego and anyone else.
WorldStep step_world(const JointState& world, const std::map<std::string, Control>& controls,
                     const std::map<std::string, BodyBox>& boxes, double dt, const std::string& ego_id = "ego");

struct Observation {
    JointState visible;
    std::vector<bool> site_visible;
};

struct RunOptions {
    double beta = 1.0;
    double site_prior = 0.1;
    CostWeights weights;
    PlannerOptions planner;
    MctsConfig mcts;
    bool keep_log = false;
};

/// Ground truth and shared caches for one (scenario, seed); reused across methods.
class TrialContext {
public:
    TrialContext(Scenario scenario, const RunOptions& options);
    TrialContext(const TrialContext&) = delete;
    TrialContext& operator=(const TrialContext&) = delete;

    const Scenario& scenario() const { return scenario_; }
    PlanCache& cache() { return *cache_; }
    /// Ground-truth trajectories of every non-ego agent.
    const std::map<std::string, OtherAgent>& truth() const { return truth_; }
    /// Whether agent `id` exists at time t.
    bool present(const std::string& id, double t) const;
    std::optional<VehicleState> state_at(const std::string& id, double t) const;
    /// Observed prefix of vehicle `id` up to time t.
    Trajectory observed_prefix(const std::string& id, double t) const;
    /// Whether every goal of the map is reachable for `id` at t under some instantiation.
    bool all_goals_reachable(const std::string& id, double t);
    /// Visibility of each site to an ego at `ego`; flags in `latched` never revert.
    Observation observe(const VehicleState& ego, double t, std::vector<bool>& latched) const;
    std::optional<double> overtake_trigger_x() const { return trigger_x_; }

private:
    Scenario scenario_;
    std::unique_ptr<PlanCache> cache_;
    std::map<std::string, OtherAgent> truth_;
    std::optional<double> trigger_x_;
    std::map<std::pair<std::string, long long>, bool> reachable_;
};

enum class Outcome { completed, collision, timeout };
std::string outcome_name(Outcome o);

struct BeliefRow {
    double t = 0.0;
    std::string vehicle_id;
    double p_true_z = 0.0;
    double p_true_goal = 0.0;
};

struct RunRecord {
    std::string scenario;
    Method method = Method::gofi;
    std::uint64_t seed = 0;
    Outcome outcome = Outcome::timeout;
    double duration = 0.0;
    std::vector<BeliefRow> beliefs;
    std::vector<JointBelief> posteriors;  // one per logged row
    Trajectory ego;
    std::vector<std::string> log;
};

/// Closed-loop trial: inference and search at 1 Hz, one second of the chosen macro executed per step.
RunRecord run_trial(TrialContext& context, Method method, const RunOptions& options);

}  // namespace gofi
