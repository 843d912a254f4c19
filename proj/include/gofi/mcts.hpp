#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gofi/inference.hpp"

namespace gofi {

class MctsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MctsConfig {
    int iterations = 100;
    int max_depth = 5;
    double r_coll = -1.0;
    double r_term = -0.3;
    double ucb_c = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SearchNode {
    int depth = 0;
    std::map<std::string, double> q_values;
    std::map<std::string, int> visit_counts;
    std::map<std::string, std::unique_ptr<SearchNode>> children;

    int total_visits() const;
    /// Largest Q over visited macros; nullopt when nothing has been visited.
    std::optional<double> max_q() const;
};

/// Q-learning backup along a traversed path, leaf last.
void backup(const std::vector<std::pair<SearchNode*, std::string>>& path, double r);

/// UCB choice among `actions`; unvisited actions first, in the given order.
std::string select_ucb(const SearchNode& node, const std::vector<std::string>& actions, double c);

/// Environment driven by the search: one determinization per iteration, one macro per step.
class SearchModel {
public:
    virtual ~SearchModel() = default;
    /// Starts an iteration at the root; returns a label naming the sampled determinization.
    virtual std::string begin_iteration(std::mt19937_64& rng) = 0;
    /// Actions applicable in the current simulated state, in a fixed order.
    virtual std::vector<std::string> actions() = 0;
    /// Simulates `action` from the current state; a value means the iteration ends with that reward.
    virtual std::optional<double> apply(const std::string& action, bool last_level) = 0;
};

struct SearchResult {
    std::string best;
    std::map<std::string, double> root_q;
    std::map<std::string, int> root_visits;
    std::map<std::string, int> determinizations;
};

SearchResult run_search(SearchModel& model, const MctsConfig& config);

/// Line-oriented debugging summary of one search.
std::string format_search_log(double t, const SearchResult& result);

struct Determinization {
    std::size_t z_index = 0;
    OccludedFactorInstantiation z;
    std::vector<std::string> goals;   // one per belief
    std::vector<OtherAgent> agents;   // predicted trajectory of each believed vehicle

    std::string label() const;
};

/// Predicted trajectory of belief `i`'s vehicle heading to `goal` under `z`.
using TrajectoryPredictor =
    std::function<OtherAgent(std::size_t i, const std::string& goal, const OccludedFactorInstantiation& z)>;

/// Draws z from `merged_z` over `zs`, then each vehicle's goal from its conditional given z.
Determinization sample_determinization(const std::vector<JointBelief>& beliefs,
                                       const std::vector<OccludedFactorInstantiation>& zs,
                                       const std::vector<double>& merged_z, std::mt19937_64& rng,
                                       const TrajectoryPredictor& predict = {});

struct EgoSearchInput {
    VehicleState ego;
    double t = 0.0;
    const GoalDef* goal = nullptr;
    const RoadMap* map = nullptr;
    CostWeights weights;
    ManeuverParams params;
    std::vector<JointBelief> beliefs;
    std::vector<OccludedFactorInstantiation> zs;
    std::vector<double> merged_z;
    TrajectoryPredictor predict;
    /// Sites whose entity the ego currently sees; their hypothesised motion is replaced by `visible_traffic`.
    std::vector<bool> visible_sites;
    /// Visible agents outside the beliefs, reacted to in every determinization.
    std::vector<OtherAgent> visible_traffic;
    /// Replaces sampling with one fixed determinization.
    std::optional<Determinization> fixed;
};

/// Goal reward for an ego trajectory, scaled into [r_term, 0].
double goal_reward(const Trajectory& ego, const CostWeights& weights, const MctsConfig& config);

struct EgoSearchResult {
    MacroAction macro;
    SearchResult search;
};

/// Determinized search over ego macro-actions.
EgoSearchResult search(const EgoSearchInput& input, const MctsConfig& config);

}  // namespace gofi
