#include "gofi/planner.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace gofi {
namespace {

// Chords shorter than this are treated as straight when estimating curvature.
constexpr double kMinChord = 0.05;

struct Node {
    double f = 0.0;
    Trajectory trajectory;
    std::vector<MacroAction> sequence;
    std::vector<std::string> names;
};

struct NodeOrder {
    bool operator()(const Node* a, const Node* b) const {
        if (a->f != b->f) {
            return a->f > b->f;
        }
        return a->names > b->names;
    }
};

bool better(double cost, const std::vector<std::string>& names, const std::optional<PlanResult>& best,
            const std::vector<std::string>& best_names) {
    if (!best) {
        return true;
    }
    if (cost != best->cost) {
        return cost < best->cost;
    }
    return names < best_names;
}

}  // namespace

void CostWeights::validate() const {
    if (w_time < 0.0 || w_accel < 0.0 || w_jerk < 0.0 || w_curvature < 0.0) {
        throw PlannerError("cost weights must be nonnegative");
    }
    if (w_time == 0.0 && w_accel == 0.0 && w_jerk == 0.0 && w_curvature == 0.0) {
        throw PlannerError("cost weights must not all be zero");
    }
}

OccludedFactorInstantiation OccludedFactorInstantiation::from_index(std::uint32_t index, std::size_t k) {
    OccludedFactorInstantiation z;
    z.bits.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        z.bits[j] = ((index >> j) & 1U) != 0U;
    }
    return z;
}

std::uint32_t OccludedFactorInstantiation::index() const {
    std::uint32_t idx = 0;
    for (std::size_t j = 0; j < bits.size(); ++j) {
        if (bits[j]) {
            idx |= 1U << j;
        }
    }
    return idx;
}

std::size_t OccludedFactorInstantiation::present_count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), true));
}

std::string OccludedFactorInstantiation::label() const {
    if (bits.empty()) {
        return "-";
    }
    std::string s;
    for (bool b : bits) {
        s.push_back(b ? '1' : '0');
    }
    return s;
}

std::vector<OccludedFactorInstantiation> all_instantiations(std::size_t k) {
    if (k > 16) {
        throw PlannerError("too many occlusion sites for exhaustive enumeration");
    }
    std::vector<OccludedFactorInstantiation> out;
    for (std::uint32_t i = 0; i < (1U << k); ++i) {
        out.push_back(OccludedFactorInstantiation::from_index(i, k));
    }
    return out;
}

double cost_of(const Trajectory& traj, const CostWeights& weights) {
    weights.validate();
    const auto& st = traj.states;
    if (st.size() < 2) {
        throw PlannerError("cost_of needs at least two states");
    }
    const double n = static_cast<double>(st.size());
    double accel = 0.0;
    for (const auto& s : st) {
        accel += std::abs(s.acceleration);
    }
    double jerk = 0.0;
    for (std::size_t i = 1; i < st.size(); ++i) {
        jerk += std::abs(st[i].acceleration - st[i - 1].acceleration) / traj.dt;
    }
    double curvature = 0.0;
    for (std::size_t i = 1; i + 1 < st.size(); ++i) {
        const Vec2 a = st[i - 1].position;
        const Vec2 b = st[i].position;
        const Vec2 c = st[i + 1].position;
        const double ab = distance(a, b);
        const double bc = distance(b, c);
        const double ca = distance(c, a);
        if (ab < kMinChord || bc < kMinChord || ca < kMinChord) {
            continue;
        }
        curvature += std::abs(2.0 * cross(b - a, c - a) / (ab * bc * ca));
    }
    const double interior = st.size() > 2 ? n - 2.0 : 1.0;
    return weights.w_time * traj.duration() + weights.w_accel * accel / n + weights.w_jerk * jerk / (n - 1.0) +
           weights.w_curvature * curvature / interior;
}

Trajectory hypothesis_prediction(const OccludedSiteDef& site, double horizon, const RoadMap& map) {
    if (!(horizon > 0.0)) {
        throw PlannerError("hypothesis_prediction: horizon must be positive");
    }
    Trajectory t;
    t.vehicle_id = site.id;
    t.dt = kDt;
    t.start_time = 0.0;
    const auto steps = static_cast<std::size_t>(std::llround(horizon / kDt));
    if (const auto* cv = std::get_if<ConstantVelocity>(&site.behavior)) {
        std::size_t lane = map.lane_index(cv->lane);
        double offset = 0.0;  // arclength of the current lane's start along the route
        const double s0 = map.lane(lane).centerline.project(site.position).arclength;
        for (std::size_t i = 0; i <= steps; ++i) {
            double s = s0 + cv->speed * kDt * static_cast<double>(i) - offset;
            bool off_road = false;
            while (s > map.lane(lane).length()) {
                const auto next = map.straight_successor(lane);
                if (!next) {
                    off_road = true;
                    break;
                }
                offset += map.lane(lane).length();
                s -= map.lane(lane).length();
                lane = *next;
            }
            if (off_road) {
                break;
            }
            const Frame f = map.lane(lane).centerline.frame_at(s);
            VehicleState vs;
            vs.position = f.point;
            vs.heading = f.heading;
            vs.speed = cv->speed;
            t.states.push_back(vs);
        }
        return t;
    }
    VehicleState vs;
    vs.position = site.position;
    vs.heading = wrap_angle(site.heading);
    t.states.assign(steps + 1, vs);
    return t;
}

std::vector<OtherAgent> instantiate_entities(const RoadMap& map, const OccludedFactorInstantiation& z, double horizon) {
    if (z.bits.size() != map.site_count()) {
        throw PlannerError("instantiation has " + std::to_string(z.bits.size()) + " bits but the map has " +
                           std::to_string(map.site_count()) + " occlusion sites");
    }
    std::vector<OtherAgent> out;
    for (std::size_t j = 0; j < z.bits.size(); ++j) {
        if (z.bits[j]) {
            const OccludedSiteDef& site = map.occlusion_sites()[j];
            out.push_back(OtherAgent{hypothesis_prediction(site, horizon, map), BodyBox{site.length, site.width}});
        }
    }
    return out;
}

std::optional<PlanResult> plan_with_agents(const VehicleState& start, double start_time, const GoalDef& goal,
                                           std::span<const OtherAgent> agents, const RoadMap& map,
                                           const CostWeights& weights, const PlannerOptions& options,
                                           const std::string& vehicle_id) {
    weights.validate();
    const ManeuverParams& p = options.params;
    Trajectory root_traj;
    root_traj.vehicle_id = vehicle_id;
    root_traj.start_time = start_time;
    root_traj.states.push_back(start);
    if (distance(start.position, goal.location) <= goal.radius) {
        return PlanResult{root_traj, 0.0, {}};
    }

    auto heuristic = [&](const VehicleState& s) {
        return weights.w_time * std::max(0.0, distance(s.position, goal.location) - goal.radius) / p.limits.v_max;
    };

    std::vector<std::unique_ptr<Node>> pool;
    std::priority_queue<Node*, std::vector<Node*>, NodeOrder> open;
    pool.push_back(std::make_unique<Node>(Node{heuristic(start), root_traj, {}, {}}));
    open.push(pool.back().get());

    std::optional<PlanResult> best;
    std::vector<std::string> best_names;
    while (!open.empty()) {
        Node* node = open.top();
        open.pop();
        if (best && node->f > best->cost) {
            break;
        }
        if (static_cast<int>(node->sequence.size()) >= options.max_depth) {
            continue;
        }
        const VehicleState& here = node->trajectory.back();
        for (const std::string& name : macro_library()) {
            auto macro = instantiate_macro(name, here, map, p);
            if (!macro) {
                continue;
            }
            RolloutOptions ro;
            ro.start_time = node->trajectory.end_time();
            ro.goal = &goal;
            ro.others = agents;
            ro.vehicle_id = vehicle_id;
            ro.params = p;
            RolloutResult r = rollout(*macro, here, map, ro);
            if (r.status == RolloutStatus::collision || r.status == RolloutStatus::timed_out) {
                continue;
            }
            Trajectory traj = concat(node->trajectory, r.trajectory);
            std::vector<std::string> names = node->names;
            names.push_back(name);
            std::vector<MacroAction> seq = node->sequence;
            seq.push_back(std::move(*macro));
            if (r.status == RolloutStatus::goal_reached) {
                const double c = cost_of(traj, weights);
                if (better(c, names, best, best_names)) {
                    best = PlanResult{std::move(traj), c, std::move(seq)};
                    best_names = std::move(names);
                }
                continue;
            }
            const double f = weights.w_time * (traj.end_time() - start_time) + heuristic(traj.back());
            pool.push_back(std::make_unique<Node>(Node{f, std::move(traj), std::move(seq), std::move(names)}));
            open.push(pool.back().get());
        }
    }
    return best;
}

std::optional<PlanResult> plan_optimal(const VehicleState& start, double start_time, const GoalDef& goal,
                                       const OccludedFactorInstantiation& z, const RoadMap& map,
                                       const CostWeights& weights, const PlannerOptions& options,
                                       std::span<const OtherAgent> traffic, const std::string& vehicle_id) {
    std::vector<OtherAgent> agents = instantiate_entities(map, z, options.prediction_horizon);
    agents.insert(agents.end(), traffic.begin(), traffic.end());
    return plan_with_agents(start, start_time, goal, agents, map, weights, options, vehicle_id);
}

}  // namespace gofi
