#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gofi/planner.hpp"
#include "support.hpp"

using namespace gofi;
using namespace gofi::testing;

namespace {

struct Best {
    std::optional<double> cost;
    std::vector<std::string> names;
};

// Exhaustive enumeration of every macro sequence up to `depth_left` long.
void enumerate(const RoadMap& map, const GoalDef& goal, std::span<const OtherAgent> agents, const CostWeights& w,
               const Trajectory& so_far, std::vector<std::string> names, int depth_left, Best& best) {
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

Best enumerate_from(const RoadMap& map, const VehicleState& start, const GoalDef& goal,
                    std::span<const OtherAgent> agents, const CostWeights& w, int depth) {
    Trajectory root;
    root.vehicle_id = "v";
    root.states.push_back(start);
    Best best;
    enumerate(map, goal, agents, w, root, {}, depth, best);
    return best;
}

std::vector<std::string> names_of(const PlanResult& p) {
    std::vector<std::string> out;
    for (const auto& m : p.macro_sequence) {
        out.push_back(m.name);
    }
    return out;
}

}  // namespace

TEST_CASE("cost_of: pure time term") {
    const Trajectory t = cruising("v", {0, 0}, 0.0, 10.0, 10.0);
    CHECK(cost_of(t, CostWeights{1, 0, 0, 0}) == doctest::Approx(10.0));
    CHECK_THROWS_AS(cost_of(t, CostWeights{0, 0, 0, 0}), PlannerError);
    CHECK_THROWS_AS(CostWeights({-1, 0, 0, 0}).validate(), PlannerError);
    Trajectory one = t;
    one.states.resize(1);
    CHECK_THROWS_AS(cost_of(one, CostWeights{}), PlannerError);
}

TEST_CASE("cost_of: braking costs more than cruising, matching the direct terms") {
    const Trajectory cruise = cruising("v", {0, 0}, 0.0, 10.0, 4.0);
    Trajectory brake = cruise;
    double v = 10.0;
    double x = 0.0;
    for (std::size_t i = 1; i < brake.states.size(); ++i) {
        const double v2 = std::max(0.0, v - 2.0 * kDt);
        x += 0.5 * (v + v2) * kDt;
        brake.states[i].position = {x, 0.0};
        brake.states[i].speed = v2;
        brake.states[i].acceleration = (v2 - v) / kDt;
        v = v2;
    }
    const CostWeights w{1.0, 0.1, 0.0, 0.0};
    CHECK(cost_of(brake, w) > cost_of(cruise, w));
    double mean_a = 0.0;
    for (const auto& s : brake.states) {
        mean_a += std::abs(s.acceleration);
    }
    mean_a /= static_cast<double>(brake.states.size());
    CHECK(cost_of(brake, w) == doctest::Approx(4.0 + 0.1 * mean_a));
}

TEST_CASE("cost_of: curvature term on a circle") {
    Trajectory t;
    const double r = 20.0;
    for (int i = 0; i <= 50; ++i) {
        const double a = 0.05 * i;
        VehicleState s;
        s.position = {r * std::cos(a), r * std::sin(a)};
        s.speed = 10.0;
        t.states.push_back(s);
    }
    CHECK(cost_of(t, CostWeights{0, 0, 0, 1}) == doctest::Approx(1.0 / r).epsilon(1e-6));
}

TEST_CASE("straight lane, goal at the end: one continue_lane") {
    const RoadMap m = straight_road(100.0);
    const auto plan = plan_optimal(at(5, 0), 0.0, m.goal("end"), {}, m, CostWeights{});
    REQUIRE(plan);
    CHECK(names_of(*plan) == std::vector<std::string>{"continue_lane"});
    CHECK(plan->cost == cost_of(plan->trajectory, CostWeights{}));
    CHECK(distance(plan->trajectory.back().position, m.goal("end").location) <= 2.0);
    // From rest at 3 m/s^2 to 10 m/s: at least the time at the limit, plus the speed-up penalty.
    const double lower = (distance(Vec2{5, 0}, m.goal("end").location) - 2.0) / 10.0;
    CHECK(plan->cost > lower);
}

TEST_CASE("unreachable goal surfaces as nullopt") {
    const RoadMap m = toy_map();
    // From the left lane past the exit there is no way back to the south branch.
    const auto plan = plan_optimal(at(70, 3.5, 0.0, 5.0), 0.0, m.goal("south"), OccludedFactorInstantiation{{false}},
                                   m, CostWeights{});
    CHECK_FALSE(plan);
}

TEST_CASE("plan_optimal equals the exhaustive minimum") {
    const RoadMap m = toy_map();
    const CostWeights w{};
    const std::vector<VehicleState> starts{at(5, 0, 0.0, 8.0), at(5, 3.5, 0.0, 8.0), at(30, 0, 0.0, 0.0),
                                           at(50, 3.5, 0.0, 10.0)};
    for (const auto& z : all_instantiations(m.site_count())) {
        const auto agents = instantiate_entities(m, z);
        for (const auto& start : starts) {
            for (const auto& goal : m.goals()) {
                for (int depth = 1; depth <= 4; ++depth) {
                    CAPTURE(goal.id);
                    CAPTURE(depth);
                    CAPTURE(z.label());
                    PlannerOptions opt;
                    opt.max_depth = depth;
                    const auto plan = plan_optimal(start, 0.0, goal, z, m, w, opt);
                    const Best oracle = enumerate_from(m, start, goal, agents, w, depth);
                    REQUIRE(plan.has_value() == oracle.cost.has_value());
                    if (plan) {
                        CHECK(plan->cost == *oracle.cost);
                        CHECK(names_of(*plan) == oracle.names);
                        CHECK(plan->cost == cost_of(plan->trajectory, w));
                    }
                }
            }
        }
    }
}

TEST_CASE("a stationary entity forces a lane change and never lowers cost") {
    const RoadMap m = toy_map();
    const VehicleState start = at(5, 0, 0.0, 8.0);
    const auto free = plan_optimal(start, 0.0, m.goal("east_r"), OccludedFactorInstantiation{{false}}, m, CostWeights{});
    const auto blocked = plan_optimal(start, 0.0, m.goal("east_r"), OccludedFactorInstantiation{{true}}, m, CostWeights{});
    REQUIRE(free);
    REQUIRE(blocked);
    CHECK(blocked->cost >= free->cost);
    const auto names = names_of(*blocked);
    CHECK(std::find(names.begin(), names.end(), "change_left") != names.end());
    const auto agents = instantiate_entities(m, OccludedFactorInstantiation{{true}});
    CHECK_FALSE(trajectory_collision(blocked->trajectory, kCarBox, agents[0].trajectory, agents[0].box));
}

TEST_CASE("plan_optimal is deterministic") {
    const RoadMap m = toy_map();
    const auto a = plan_optimal(at(5, 0, 0.0, 8.0), 0.0, m.goal("south"), OccludedFactorInstantiation{{true}}, m, {});
    const auto b = plan_optimal(at(5, 0, 0.0, 8.0), 0.0, m.goal("south"), OccludedFactorInstantiation{{true}}, m, {});
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->cost == b->cost);
    CHECK(a->trajectory.states == b->trajectory.states);
}

TEST_CASE("instantiation indexing") {
    const auto all = all_instantiations(3);
    REQUIRE(all.size() == 8);
    for (std::uint32_t i = 0; i < 8; ++i) {
        CHECK(all[i].index() == i);
        CHECK(OccludedFactorInstantiation::from_index(i, 3) == all[i]);
    }
    CHECK(all[5].label() == "101");
    CHECK(all[5].present_count() == 2);
    CHECK(all_instantiations(0).size() == 1);
    CHECK(all_instantiations(0)[0].label() == "-");
    const RoadMap m = toy_map();
    CHECK_THROWS_AS(instantiate_entities(m, OccludedFactorInstantiation{{true, false}}), PlannerError);
}

TEST_CASE("hypothesis predictions") {
    const RoadMap m = straight_road(200.0);
    const OccludedSiteDef still{"s", {20, 0}, 0.0, Stationary{}, 4.0, 1.8};
    const Trajectory a = hypothesis_prediction(still, 5.0, m);
    REQUIRE(a.states.size() == 51);
    for (const auto& s : a.states) {
        CHECK(s == a.states.front());
    }

    const OccludedSiteDef mover{"c", {20, 0}, 0.0, ConstantVelocity{8.0, "A"}, 4.0, 1.8};
    const Trajectory b = hypothesis_prediction(mover, 5.0, m);
    CHECK(distance(b.back().position, b.states.front().position) == doctest::Approx(40.0).epsilon(1e-9));

    // Curved lane: walk the polyline vertices to the expected arclength.
    const auto pts = arc_points({0, 0}, 30.0, 0.0, 2.0, 0.7);
    RoadMap curved({make_lane("C", pts)}, {}, {}, {});
    const OccludedSiteDef on_arc{"c", pts.front(), 1.57, ConstantVelocity{6.0, "C"}, 4.0, 1.8};
    const Trajectory c = hypothesis_prediction(on_arc, 5.0, curved);
    double remaining = 30.0;
    Vec2 expected = pts.back();
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double seg = distance(pts[i - 1], pts[i]);
        if (remaining <= seg) {
            expected = pts[i - 1] + (pts[i] - pts[i - 1]) * (remaining / seg);
            break;
        }
        remaining -= seg;
    }
    CHECK(distance(c.back().position, expected) < 1e-6);
    CHECK_THROWS_AS(hypothesis_prediction(still, 0.0, m), PlannerError);
}
