#include "gofi/oracles.hpp"

#include <numbers>
#include <stdexcept>

#include "gofi/inference.hpp"
#include "gofi/maneuvers.hpp"
#include "gofi/mcts.hpp"
#include "map_build.hpp"

namespace gofi {
namespace {

using namespace build;
using nlohmann::json;

constexpr double kPi = std::numbers::pi;

// Two lanes in 60 m and 90 m chunks with a parked car in the right lane.
RoadMap blocked_two_lane() {
    std::vector<Lane> lanes{lane("R1", straight({0, 0}, {60, 0}), {"R2"}), lane("L1", straight({0, 3.5}, {60, 3.5}), {"L2"}),
                            lane("R2", straight({60, 0}, {150, 0})), lane("L2", straight({60, 3.5}, {150, 3.5}))};
    pair_lanes(lanes[1], lanes[0]);
    pair_lanes(lanes[3], lanes[2]);
    std::vector<GoalDef> goals{GoalDef{"end_r", {145, 0}, 0.0, 2.0}, GoalDef{"end_l", {145, 3.5}, 0.0, 2.0}};
    return RoadMap(std::move(lanes), std::move(goals), {OccludedSiteDef{"parked", {90, 0}, 0.0, Stationary{}, 4.0, 1.8}},
                   {});
}

// Two lanes with a right exit after the first chunk and a parked car beyond it.
RoadMap exit_ramp() {
    std::vector<Lane> lanes{lane("R1", straight({0, 0}, {60, 0}), {"R2", "X"}),
                            lane("L1", straight({0, 3.5}, {60, 3.5}), {"L2"}),
                            lane("R2", straight({60, 0}, {130, 0})),
                            lane("L2", straight({60, 3.5}, {130, 3.5})),
                            lane("X", arc({60, -12}, 12.0, kPi / 2.0, 0.0), {"S"}, 8.0),
                            lane("S", straight({72, -12}, {72, -60}))};
    pair_lanes(lanes[1], lanes[0]);
    pair_lanes(lanes[3], lanes[2]);
    std::vector<GoalDef> goals{GoalDef{"east", {125, 0}, 0.0, 2.0}, GoalDef{"south", {72, -50}, 0.0, 2.0}};
    return RoadMap(std::move(lanes), std::move(goals), {OccludedSiteDef{"parked", {85, 0}, 0.0, Stationary{}, 4.0, 1.8}},
                   {});
}

// Left turn across an oncoming lane that may carry a hidden car.
RoadMap left_turn() {
    std::vector<Lane> lanes{lane("in", straight({0, 0}, {60, 0}), {"thru", "turn"}),
                            lane("thru", straight({60, 0}, {120, 0})),
                            lane("turn", arc({60, 10}, 10.0, -kPi / 2.0, 0.0), {"up"}),
                            lane("up", straight({70, 10}, {70, 60})),
                            lane("oncoming", straight({130, 3.5}, {0, 3.5}))};
    std::vector<GoalDef> goals{GoalDef{"north", {70, 55}, 0.0, 2.0}, GoalDef{"east", {115, 0}, 0.0, 2.0}};
    OccludedSiteDef car{"oncoming_car", {125, 3.5}, kPi, ConstantVelocity{8.0, "oncoming"}, 4.0, 1.8};
    return RoadMap(std::move(lanes), std::move(goals), {car}, {});
}

VehicleState pose(double x, double y, double speed) {
    VehicleState s;
    s.position = {x, y};
    s.speed = speed;
    return s;
}

void enumerate(const RoadMap& map, const GoalDef& goal, std::span<const OtherAgent> agents, const CostWeights& w,
               const Trajectory& so_far, const std::vector<std::string>& names, int depth_left, EnumeratedPlan& best) {
    if (depth_left == 0) {
        return;
    }
    for (const auto& name : macro_library()) {
        const auto macro = instantiate_macro(name, so_far.back(), map);
        if (!macro) {
            continue;
        }
        RolloutOptions ro;
        ro.start_time = so_far.end_time();
        ro.goal = &goal;
        ro.others = agents;
        ro.vehicle_id = so_far.vehicle_id;
        const RolloutResult r = rollout(*macro, so_far.back(), map, ro);
        if (r.status == RolloutStatus::collision || r.status == RolloutStatus::timed_out) {
            continue;
        }
        const Trajectory next = concat(so_far, r.trajectory);
        auto seq = names;
        seq.push_back(name);
        if (r.status == RolloutStatus::goal_reached) {
            const double c = cost_of(next, w);
            if (!best.cost || c < *best.cost || (c == *best.cost && seq < best.names)) {
                best.cost = c;
                best.names = seq;
            }
            continue;
        }
        enumerate(map, goal, agents, w, next, seq, depth_left - 1, best);
    }
}

// Leaves of a two-level tree keyed by "a/x"; averaging the leaves would pick the other root action.
class ToyTree : public SearchModel {
public:
    std::map<std::string, std::vector<std::string>> children{{"", {"a", "b"}}, {"a", {"x", "y"}}, {"b", {"x", "y"}}};
    std::map<std::string, double> leaves{{"a/x", 0.9}, {"a/y", -1.0}, {"b/x", 0.5}, {"b/y", 0.4}};

    std::string begin_iteration(std::mt19937_64&) override {
        at_.clear();
        return "only";
    }
    std::vector<std::string> actions() override {
        const auto it = children.find(at_);
        return it == children.end() ? std::vector<std::string>{} : it->second;
    }
    std::optional<double> apply(const std::string& action, bool) override {
        at_ = at_.empty() ? action : at_ + "/" + action;
        const auto it = leaves.find(at_);
        return it == leaves.end() ? std::nullopt : std::optional<double>(it->second);
    }

    double value(const std::string& at) const {
        if (const auto it = leaves.find(at); it != leaves.end()) {
            return it->second;
        }
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& a : children.at(at)) {
            best = std::max(best, value(at.empty() ? a : at + "/" + a));
        }
        return best;
    }

private:
    std::string at_;
};

}  // namespace

std::vector<std::pair<std::string, RoadMap>> oracle_toy_maps() {
    return {{"blocked_two_lane", blocked_two_lane()}, {"exit_ramp", exit_ramp()}, {"left_turn", left_turn()}};
}

EnumeratedPlan enumerate_plans(const VehicleState& start, const GoalDef& goal, const OccludedFactorInstantiation& z,
                               const RoadMap& map, const CostWeights& weights, int depth) {
    const auto agents = instantiate_entities(map, z);
    Trajectory root;
    root.vehicle_id = "v";
    root.states.push_back(start);
    EnumeratedPlan best;
    enumerate(map, goal, agents, weights, root, {}, depth, best);
    return best;
}

json oracle_astar_enum() {
    const std::map<std::string, std::vector<VehicleState>> starts{
        {"blocked_two_lane", {pose(5, 0, 8), pose(5, 3.5, 10)}},
        {"exit_ramp", {pose(5, 0, 8), pose(20, 3.5, 6)}},
        {"left_turn", {pose(5, 0, 8), pose(40, 0, 4)}}};
    const CostWeights w{};
    json cases = json::array();
    for (const auto& [name, map] : oracle_toy_maps()) {
        for (const auto& start : starts.at(name)) {
            for (const auto& goal : map.goals()) {
                for (const auto& z : all_instantiations(map.site_count())) {
                    const auto exhaustive = enumerate_plans(start, goal, z, map, w, PlannerOptions{}.max_depth);
                    const auto plan = plan_optimal(start, 0.0, goal, z, map, w);
                    json row{{"map", name},
                             {"start", {start.position.x, start.position.y, start.speed}},
                             {"goal", goal.id},
                             {"z", z.label()},
                             {"enum_cost", exhaustive.cost ? json(*exhaustive.cost) : json(nullptr)},
                             {"enum_macros", exhaustive.names},
                             {"astar_cost", plan ? json(plan->cost) : json(nullptr)}};
                    std::vector<std::string> names;
                    if (plan) {
                        for (const auto& m : plan->macro_sequence) {
                            names.push_back(m.name);
                        }
                    }
                    row["astar_macros"] = names;
                    cases.push_back(std::move(row));
                }
            }
        }
    }
    return json{{"oracle", "astar_enum"}, {"cases", cases}};
}

json oracle_bayes_table() {
    const std::vector<std::string> goals{"G1", "G2"};
    const std::vector<std::string> zs{"0", "1"};
    // likelihood[g][z]: the stop is explained by G2 alone or by G1 with the hidden entity.
    const std::vector<std::vector<double>> likelihood{{0.05, 0.9}, {0.7, 0.6}};
    const std::vector<double> goal_prior{0.5, 0.5};
    const double site_prior = 0.1;
    const std::vector<double> z_prior{1.0 - site_prior, site_prior};
    std::vector<std::vector<double>> joint(2, std::vector<double>(2));
    double total = 0.0;
    for (std::size_t g = 0; g < 2; ++g) {
        for (std::size_t z = 0; z < 2; ++z) {
            joint[g][z] = likelihood[g][z] * goal_prior[g] * z_prior[z];
            total += joint[g][z];
        }
    }
    for (auto& row : joint) {
        for (double& v : row) {
            v /= total;
        }
    }
    return json{{"oracle", "bayes_table"}, {"goals", goals},         {"zs", zs},
                {"likelihood", likelihood}, {"goal_prior", goal_prior}, {"site_prior", site_prior},
                {"posterior", joint}};
}

json oracle_mcts_dp(int iterations) {
    ToyTree tree;
    MctsConfig config;
    config.iterations = iterations;
    config.max_depth = 2;
    const SearchResult r = run_search(tree, config);
    json dp;
    std::string dp_best;
    for (const auto& a : tree.children.at("")) {
        dp[a] = tree.value(a);
        if (dp_best.empty() || tree.value(a) > tree.value(dp_best)) {
            dp_best = a;
        }
    }
    return json{{"oracle", "mcts_dp"}, {"leaves", tree.leaves}, {"dp_values", dp},      {"dp_best", dp_best},
                {"mcts_best", r.best},  {"mcts_root_q", r.root_q}, {"mcts_root_visits", r.root_visits},
                {"iterations", iterations}};
}

json run_oracle(const std::string& which) {
    if (which == "astar_enum") {
        return oracle_astar_enum();
    }
    if (which == "bayes_table") {
        return oracle_bayes_table();
    }
    if (which == "mcts_dp") {
        return oracle_mcts_dp();
    }
    throw std::invalid_argument("unknown oracle '" + which + "' (expected astar_enum, bayes_table or mcts_dp)");
}

}  // namespace gofi
