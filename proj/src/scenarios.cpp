#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "gofi/simulator.hpp"
#include "map_build.hpp"

namespace gofi {
namespace {

using namespace build;

constexpr double kPi = std::numbers::pi;

// Two eastbound lanes, R at y=0 and L at y=3.5, split at the given x stations.
std::vector<Lane> eastbound_pair(const std::vector<double>& xs, double r_limit, double l_limit) {
    std::vector<Lane> out;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const std::string n = std::to_string(i + 1);
        const std::string next = std::to_string(i + 2);
        const bool last = i + 2 == xs.size();
        Lane r = lane("R" + n, straight({xs[i], 0.0}, {xs[i + 1], 0.0}), last ? std::vector<std::string>{}
                                                                               : std::vector<std::string>{"R" + next},
                      r_limit);
        Lane l = lane("L" + n, straight({xs[i], 3.5}, {xs[i + 1], 3.5}), last ? std::vector<std::string>{}
                                                                               : std::vector<std::string>{"L" + next},
                      l_limit);
        pair_lanes(l, r);
        out.push_back(std::move(r));
        out.push_back(std::move(l));
    }
    return out;
}

// Pedestrian crossing: V1 yields at a crosswalk in its lane, hiding the pedestrian from the ego.
RoadMap map_s1() {
    auto lanes = eastbound_pair({-40.0, 40.0, 80.0, 220.0}, 10.0, 10.0);
    find_lane(lanes, "R2").successors.push_back("X");
    lanes.push_back(lane("X", arc({80.0, -12.0}, 12.0, kPi / 2.0, 0.0), {"S"}));
    lanes.push_back(lane("S", straight({92.0, -12.0}, {92.0, -100.0})));
    Lane cw = lane("CW", straight({60.0, -6.0}, {60.0, 10.0}), {}, 2.0);
    cw.kind = LaneKind::crosswalk;
    lanes.push_back(std::move(cw));
    std::vector<GoalDef> goals{GoalDef{"G1", {200.0, 0.0}, 0.0, 2.0}, GoalDef{"G2", {92.0, -80.0}, 0.0, 2.0}};
    std::vector<OccludedSiteDef> sites{
        OccludedSiteDef{"pedestrian", {60.0, -6.0}, kPi / 2.0, ConstantVelocity{1.4, "CW"}, 0.6, 0.6}};
    return RoadMap(std::move(lanes), std::move(goals), std::move(sites), {});
}

// Stopped car in the fast lane beyond an exit; V1 overtakes through the slow right lane and returns.
RoadMap map_s2() {
    auto lanes = eastbound_pair({-30.0, 30.0, 55.0, 80.0, 260.0}, 5.0, 10.0);
    find_lane(lanes, "R2").successors.push_back("X");
    // No lane change into the slow lane alongside the blocker.
    find_lane(lanes, "L3").right_neighbor.reset();
    lanes.push_back(lane("X", arc({55.0, -12.0}, 12.0, kPi / 2.0, 0.0), {"S"}, 7.0));
    lanes.push_back(lane("S", straight({67.0, -12.0}, {67.0, -100.0}), {}, 7.0));
    std::vector<GoalDef> goals{GoalDef{"G1", {250.0, 3.5}, 0.0, 2.0}, GoalDef{"G2", {67.0, -60.0}, 0.0, 2.0}};
    std::vector<OccludedSiteDef> sites{OccludedSiteDef{"blocker", {70.0, 3.5}, 0.0, Stationary{}, 4.0, 1.8}};
    return RoadMap(std::move(lanes), std::move(goals), std::move(sites), {});
}

// Main road (EB y=0, WB y=3.5) split around a junction spanning x in [-7.75, 7.75].
std::vector<Lane> main_road(double reach) {
    return {lane("EB1", straight({-reach, 0.0}, {-7.75, 0.0}), {"EB2"}),
            lane("EB2", straight({-7.75, 0.0}, {7.75, 0.0}), {"EB3"}),
            lane("EB3", straight({7.75, 0.0}, {reach, 0.0})),
            lane("WB1", straight({reach, 3.5}, {7.75, 3.5}), {"WB2"}),
            lane("WB2", straight({7.75, 3.5}, {-7.75, 3.5}), {"WB3"}),
            lane("WB3", straight({-7.75, 3.5}, {-reach, 3.5}))};
}

// Crossroads with a building hiding westbound traffic from the north arm.
RoadMap map_s3() {
    std::vector<Lane> lanes{lane("EB1", straight({-100.0, 0.0}, {-7.75, 0.0}), {"EB2"}),
                            lane("EB2", straight({-7.75, 0.0}, {6.75, 0.0}), {"EB3"}),
                            lane("EB3", straight({6.75, 0.0}, {100.0, 0.0})),
                            lane("WB1", straight({100.0, 3.5}, {7.75, 3.5}), {"WB2"}),
                            lane("WB2", straight({7.75, 3.5}, {-3.25, 3.5}), {"WB3"}),
                            lane("WB3", straight({-3.25, 3.5}, {-7.75, 3.5}), {"WB4"}),
                            lane("WB4", straight({-7.75, 3.5}, {-100.0, 3.5}))};
    lanes.push_back(lane("SNB", straight({1.75, -100.0}, {1.75, -5.0}), {"JNB", "RTE"}));
    lanes.push_back(lane("JNB", straight({1.75, -5.0}, {1.75, 10.0}), {"NNB"}));
    lanes.push_back(lane("NNB", straight({1.75, 10.0}, {1.75, 100.0})));
    lanes.push_back(lane("RTE", arc({6.75, -5.0}, 5.0, kPi, kPi / 2.0), {"EB3"}));
    lanes.push_back(lane("NSB", straight({-1.75, 100.0}, {-1.75, 10.0}), {"JSB"}));
    lanes.push_back(lane("JSB", straight({-1.75, 10.0}, {-1.75, -6.0}), {"SSB"}));
    lanes.push_back(lane("SSB", straight({-1.75, -6.0}, {-1.75, -100.0})));
    std::vector<GoalDef> goals{GoalDef{"G1", {1.75, 60.0}, 0.0, 2.0}, GoalDef{"G2", {80.0, 0.0}, 0.0, 2.0}};
    std::vector<OccludedSiteDef> sites{
        OccludedSiteDef{"oncoming", {60.0, 3.5}, kPi, ConstantVelocity{10.0, "WB1"}, 4.0, 1.8}};
    std::vector<Polygon> obstructions{{{8.0, 20.0}, {60.0, 20.0}, {60.0, 60.0}, {8.0, 60.0}}};
    return RoadMap(std::move(lanes), std::move(goals), std::move(sites), std::move(obstructions));
}

// T-junction; a car stopped inside the junction holds V1 before it could turn right.
RoadMap map_s4() {
    auto lanes = main_road(120.0);
    find_lane(lanes, "EB1").successors.push_back("RTS");
    lanes.push_back(lane("RTS", arc({-7.75, -6.0}, 6.0, kPi / 2.0, 0.0), {"SSB"}));
    lanes.push_back(lane("SSB", straight({-1.75, -6.0}, {-1.75, -100.0})));
    lanes.push_back(lane("NSB", straight({-1.75, 100.0}, {-1.75, 9.5}), {"RTW"}));
    lanes.push_back(lane("RTW", arc({-7.75, 9.5}, 6.0, 0.0, -kPi / 2.0), {"WB3"}));
    std::vector<GoalDef> goals{GoalDef{"G1", {-4.0, 0.0}, 0.0, 1.0}, GoalDef{"G2", {-1.75, -60.0}, 0.0, 2.0}};
    std::vector<OccludedSiteDef> sites{OccludedSiteDef{"stopped", {5.0, 0.0}, 0.0, Stationary{}, 4.0, 1.8}};
    return RoadMap(std::move(lanes), std::move(goals), std::move(sites), {});
}

struct Jitter {
    double position = 5.0;
    double speed = 2.0;
};

struct AgentSpec {
    std::string id;
    Role role;
    Vec2 position;
    double heading;
    double speed;
    BodyBox box;
    std::string goal;
    std::optional<std::size_t> site;
    Jitter jitter;
};

struct ScenarioSpec {
    std::string base;
    GoalDef ego_goal;
    std::vector<AgentSpec> agents;
    std::vector<bool> true_z;
    VisibilityRule visibility;
};

constexpr Jitter kFixed{0.0, 0.0};

ScenarioSpec spec_for(const std::string& id) {
    const std::string base = id.substr(0, 1);
    const bool variant = id.size() > 1;
    ScenarioSpec s;
    s.base = base;
    if (base == "1") {
        s.ego_goal = GoalDef{"ego_goal", {200.0, 3.5}, 0.0, 2.0};
        s.agents = {{"ego", Role::ego, {-4.0, 3.5}, 0.0, 8.0, kCarBox, "", {}, Jitter{}},
                    {"V1", Role::observed, {20.0, 0.0}, 0.0, 8.0, kCarBox, "G1", {}, Jitter{}},
                    {"P", Role::pedestrian, {60.0, -6.0}, kPi / 2.0, 1.4, kPedestrianBox, "", 0, kFixed}};
        s.true_z = {true};
        s.visibility = VisibilityRule::vehicle_shadow;
    } else if (base == "2") {
        s.ego_goal = GoalDef{"ego_goal", {255.0, 3.5}, 0.0, 2.0};
        s.agents = {{"ego", Role::ego, {0.0, 3.5}, 0.0, 8.0, kCarBox, "", {}, Jitter{}},
                    {"V1", Role::observed, {25.0, 3.5}, 0.0, 9.0, kCarBox, "G1", {}, Jitter{}},
                    {"O", Role::occluded, {70.0, 3.5}, 0.0, 0.0, kCarBox, "", 0, kFixed}};
        s.true_z = {true};
        s.visibility = VisibilityRule::overtake_trigger;
    } else if (base == "3") {
        s.ego_goal = GoalDef{"ego_goal", {-1.75, -60.0}, 0.0, 2.0};
        s.agents = {{"ego", Role::ego, {-1.75, 62.0}, -kPi / 2.0, 8.0, kCarBox, "", {}, Jitter{}},
                    {"V1", Role::observed, {1.75, -48.0}, kPi / 2.0, 8.0, kCarBox, "G1", {}, Jitter{3.0, 1.0}},
                    {"O", Role::occluded, {60.0, 3.5}, kPi, 10.0, kCarBox, "", 0, Jitter{3.0, 1.0}}};
        s.true_z = {true};
        s.visibility = VisibilityRule::building;
    } else if (base == "4") {
        s.ego_goal = GoalDef{"ego_goal", {-60.0, 3.5}, 0.0, 2.0};
        s.agents = {{"ego", Role::ego, {-1.75, 50.0}, -kPi / 2.0, 8.0, kCarBox, "", {}, Jitter{}},
                    {"V1", Role::observed, {-60.0, 0.0}, 0.0, 10.0, kCarBox, "G1", {}, Jitter{}},
                    {"O", Role::occluded, {5.0, 0.0}, 0.0, 0.0, kCarBox, "", 0, kFixed}};
        s.true_z = {true};
        s.visibility = VisibilityRule::none;
    } else {
        throw ScenarioError("unknown scenario '" + id + "'");
    }
    if (variant) {
        if (id != "2v" && id != "4v") {
            throw ScenarioError("unknown scenario '" + id + "'");
        }
        s.true_z.assign(s.true_z.size(), false);
        for (auto& a : s.agents) {
            if (a.role == Role::observed) {
                a.goal = "G2";
            }
        }
    } else if (id.size() != 1) {
        throw ScenarioError("unknown scenario '" + id + "'");
    }
    return s;
}

}  // namespace

Perception parse_perception(const std::string& name) {
    if (name == "blind") {
        return Perception::blind;
    }
    if (name == "geometric") {
        return Perception::geometric;
    }
    throw ScenarioError("unknown perception mode '" + name + "'");
}

std::string perception_name(Perception p) { return p == Perception::blind ? "blind" : "geometric"; }

std::vector<const ScenarioAgent*> Scenario::observed() const {
    std::vector<const ScenarioAgent*> out;
    for (const auto& a : agents) {
        if (a.role == Role::observed) {
            out.push_back(&a);
        }
    }
    return out;
}

const std::vector<std::string>& scenario_ids() {
    static const std::vector<std::string> ids{"1", "2", "3", "4", "2v", "4v"};
    return ids;
}

RoadMap scenario_map(const std::string& id) {
    const std::string base = spec_for(id).base;
    if (base == "1") {
        return map_s1();
    }
    if (base == "2") {
        return map_s2();
    }
    if (base == "3") {
        return map_s3();
    }
    return map_s4();
}

Scenario build_scenario(const std::string& id, std::uint64_t seed, Perception perception) {
    const ScenarioSpec spec = spec_for(id);
    const RoadMap base = scenario_map(id);
    std::mt19937_64 rng(seed);
    Scenario sc;
    sc.id = id;
    sc.seed = seed;
    sc.ego_goal = spec.ego_goal;
    sc.true_z.bits = spec.true_z;
    sc.perception = perception;
    sc.visibility = spec.visibility;
    std::vector<OccludedSiteDef> sites = base.occlusion_sites();
    for (const auto& a : spec.agents) {
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        const double ds = a.jitter.position * unit(rng);
        const double dv = a.jitter.speed * unit(rng);
        ScenarioAgent agent;
        agent.id = a.id;
        agent.role = a.role;
        agent.initial.position = a.position + unit_from_heading(a.heading) * ds;
        agent.initial.heading = a.heading;
        agent.initial.speed = std::max(0.0, a.speed + dv);
        agent.box = a.box;
        agent.goal = a.goal;
        agent.site = a.site;
        if (a.site) {
            // The hypothesis at the site matches where the real entity would be.
            OccludedSiteDef& site = sites.at(*a.site);
            site.position = agent.initial.position;
            if (auto* cv = std::get_if<ConstantVelocity>(&site.behavior)) {
                cv->speed = agent.initial.speed;
            }
        }
        sc.agents.push_back(std::move(agent));
    }
    sc.map = RoadMap(base.lanes(), base.goals(), std::move(sites), base.obstructions());
    return sc;
}

}  // namespace gofi
