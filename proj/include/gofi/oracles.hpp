#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gofi/planner.hpp"
#include "json.hpp"

namespace gofi {

/// Small named maps for the planner oracle.
std::vector<std::pair<std::string, RoadMap>> oracle_toy_maps();

struct EnumeratedPlan {
    std::optional<double> cost;
    std::vector<std::string> names;
};

/// Cheapest macro sequence of length <= depth by exhaustive enumeration; ties go to the smaller name sequence.
EnumeratedPlan enumerate_plans(const VehicleState& start, const GoalDef& goal, const OccludedFactorInstantiation& z,
                               const RoadMap& map, const CostWeights& weights, int depth);

/// Exhaustive minimum next to plan_optimal for every start, goal and instantiation of the toy maps.
nlohmann::json oracle_astar_enum();

/// Fixed 2x2 likelihood table with its hand-normalised joint posterior.
nlohmann::json oracle_bayes_table();

/// Two-level toy tree with exact max-backup values and the search result on it.
nlohmann::json oracle_mcts_dp(int iterations = 2000);

/// Dispatch by name: astar_enum, bayes_table or mcts_dp. Throws std::invalid_argument otherwise.
nlohmann::json run_oracle(const std::string& which);

}  // namespace gofi
