#include "gofi/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace gofi {
namespace {

constexpr double kControlPeriod = 1.0;
constexpr double kPredictionHorizon = 30.0;

long long step_of(double t) { return std::llround(t / kDt); }

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = a * 0x9E3779B97F4A7C15ULL;
    h ^= b + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    h ^= c + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    return h;
}

const ScenarioAgent* site_agent(const Scenario& sc, std::size_t site) {
    for (const auto& a : sc.agents) {
        if (a.site && *a.site == site) {
            return &a;
        }
    }
    return nullptr;
}

double true_z_probability(const JointBelief& b, const OccludedFactorInstantiation& z) {
    const auto zi = b.z_index(z);
    return zi ? marginal_z(b)[*zi] : 0.0;
}

double true_goal_probability(const JointBelief& b, const std::string& goal) {
    const auto gi = b.goal_index(goal);
    if (!gi) {
        return 0.0;
    }
    double p = 0.0;
    for (std::size_t z = 0; z < b.zs.size(); ++z) {
        p += b.at(*gi, z);
    }
    return p;
}

Determinization map_determinization(const std::vector<JointBelief>& present, const std::vector<OccludedFactorInstantiation>& zs,
                                    const std::vector<double>& merged, const TrajectoryPredictor& predict) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < zs.size(); ++i) {
        if (merged[i] > merged[best] || (merged[i] == merged[best] && zs[i].label() < zs[best].label())) {
            best = i;
        }
    }
    Determinization d;
    d.z_index = best;
    d.z = zs[best];
    for (std::size_t i = 0; i < present.size(); ++i) {
        const auto zi = present[i].z_index(d.z);
        if (!zi) {
            throw InferenceError("MAP instantiation missing from the belief of '" + present[i].vehicle_id + "'");
        }
        const auto cond = conditional_goal(present[i], *zi);
        std::size_t g = 0;
        for (std::size_t j = 1; j < cond.size(); ++j) {
            if (cond[j] > cond[g] || (cond[j] == cond[g] && present[i].goals[j] < present[i].goals[g])) {
                g = j;
            }
        }
        d.goals.push_back(present[i].goals[g]);
        if (predict) {
            d.agents.push_back(predict(i, d.goals.back(), d.z));
        }
    }
    return d;
}

}  // namespace

OtherAgent constant_velocity_prediction(const std::string& id, const VehicleState& state, double t, double horizon,
                                        const RoadMap& map, BodyBox box) {
    Trajectory traj;
    traj.vehicle_id = id;
    traj.start_time = t;
    const auto steps = static_cast<std::size_t>(std::llround(horizon / kDt));
    const auto loc = map.localize(state.position, state.heading, 1.0);
    std::optional<std::size_t> lane;
    double s = 0.0;
    if (loc && box.length > kPedestrianBox.length) {
        lane = loc->lane;
        s = loc->arclength;
    }
    for (std::size_t i = 0; i <= steps; ++i) {
        VehicleState vs = state;
        vs.acceleration = 0.0;
        const double d = state.speed * kDt * static_cast<double>(i);
        if (lane) {
            double at = s + d;
            std::size_t l = *lane;
            bool off = false;
            while (at > map.lane(l).length()) {
                const auto next = map.straight_successor(l);
                if (!next) {
                    off = true;
                    break;
                }
                at -= map.lane(l).length();
                l = *next;
            }
            if (off) {
                break;
            }
            const Frame f = map.lane(l).centerline.frame_at(at);
            vs.position = i == 0 ? state.position : f.point;
            vs.heading = i == 0 ? state.heading : f.heading;
        } else {
            vs.position = state.position + unit_from_heading(state.heading) * d;
        }
        traj.states.push_back(vs);
    }
    return OtherAgent{std::move(traj), box};
}

WorldStep step_world(const JointState& world, const std::map<std::string, Control>& controls,
                     const std::map<std::string, BodyBox>& boxes, double dt, const std::string& ego_id) {
    WorldStep out;
    out.world.timestamp = world.timestamp + dt;
    for (const auto& [id, s] : world.vehicles) {
        const auto c = controls.find(id);
        Control ctl;
        if (c != controls.end()) {
            ctl = c->second;
        } else {
            ctl.path_frame = Frame{s.position, s.heading, 0.0};
        }
        out.world.vehicles[id] = step(s, ctl.accel, ctl.path_frame, dt);
    }
    const auto ego = out.world.vehicles.find(ego_id);
    if (ego == out.world.vehicles.end()) {
        return out;
    }
    const auto box_of = [&](const std::string& id) {
        const auto it = boxes.find(id);
        return it == boxes.end() ? kCarBox : it->second;
    };
    for (const auto& [id, s] : out.world.vehicles) {
        if (id != ego_id && collides(ego->second, box_of(ego_id), s, box_of(id))) {
            out.ego_collisions.push_back(id);
        }
    }
    return out;
}

TrialContext::TrialContext(Scenario scenario, const RunOptions& options) : scenario_(std::move(scenario)) {
    cache_ = std::make_unique<PlanCache>(scenario_.map, options.weights, options.planner);
    const auto& sites = scenario_.map.occlusion_sites();
    for (const auto& a : scenario_.agents) {
        if (a.role == Role::ego) {
            continue;
        }
        if (a.role == Role::observed) {
            const auto& plan = cache_->plan(a.id, a.initial, 0.0, scenario_.map.goal(a.goal), scenario_.true_z);
            if (!plan) {
                throw ScenarioError("scenario " + scenario_.id + ": '" + a.id + "' cannot reach " + a.goal);
            }
            OtherAgent agent{plan->trajectory, a.box};
            agent.trajectory.vehicle_id = a.id;
            truth_.emplace(a.id, std::move(agent));
            continue;
        }
        if (!a.site || !scenario_.true_z.bits.at(*a.site)) {
            continue;
        }
        OtherAgent agent{hypothesis_prediction(sites.at(*a.site), options.planner.prediction_horizon, scenario_.map),
                         a.box};
        agent.trajectory.vehicle_id = a.id;
        truth_.emplace(a.id, std::move(agent));
    }
    if (scenario_.visibility == VisibilityRule::overtake_trigger) {
        for (const auto* v : scenario_.observed()) {
            const Vec2 dir = unit_from_heading(v->initial.heading);
            for (const auto& s : truth_.at(v->id).trajectory.states) {
                if (std::abs(cross(dir, s.position - v->initial.position)) > 0.5) {
                    trigger_x_ = s.position.x;
                    break;
                }
            }
        }
    }
}

bool TrialContext::present(const std::string& id, double t) const {
    const auto it = truth_.find(id);
    return it != truth_.end() && it->second.trajectory.index_at(t).has_value();
}

std::optional<VehicleState> TrialContext::state_at(const std::string& id, double t) const {
    const auto it = truth_.find(id);
    if (it == truth_.end()) {
        return std::nullopt;
    }
    const auto i = it->second.trajectory.index_at(t);
    if (!i) {
        return std::nullopt;
    }
    return it->second.trajectory.states[*i];
}

Trajectory TrialContext::observed_prefix(const std::string& id, double t) const {
    const Trajectory& full = truth_.at(id).trajectory;
    Trajectory out = full;
    const auto i = full.index_at(t);
    if (i) {
        out.states.resize(*i + 1);
    }
    return out;
}

bool TrialContext::all_goals_reachable(const std::string& id, double t) {
    const auto key = std::make_pair(id, step_of(t));
    if (const auto it = reachable_.find(key); it != reachable_.end()) {
        return it->second;
    }
    const auto state = state_at(id, t);
    bool all = state.has_value();
    if (all) {
        const auto zs = all_instantiations(scenario_.map.site_count());
        for (const auto& g : scenario_.map.goals()) {
            bool any = false;
            for (const auto& z : zs) {
                if (cache_->plan(id, *state, t, g, z)) {
                    any = true;
                    break;
                }
            }
            if (!any) {
                all = false;
                break;
            }
        }
    }
    reachable_.emplace(key, all);
    return all;
}

Observation TrialContext::observe(const VehicleState& ego, double t, std::vector<bool>& latched) const {
    Observation obs;
    obs.visible.timestamp = t;
    obs.visible.vehicles[scenario_.ego().id] = ego;
    std::vector<Polygon> boxes;
    for (const auto* v : scenario_.observed()) {
        if (const auto s = state_at(v->id, t)) {
            obs.visible.vehicles[v->id] = *s;
            boxes.push_back(body_polygon(*s, v->box, kOccluderInflation));
        }
    }
    latched.resize(scenario_.map.site_count(), false);
    for (std::size_t j = 0; j < latched.size(); ++j) {
        const ScenarioAgent* entity = site_agent(scenario_, j);
        const auto s = entity ? state_at(entity->id, t) : std::nullopt;
        if (scenario_.perception == Perception::geometric && s && !latched[j]) {
            switch (scenario_.visibility) {
                case VisibilityRule::vehicle_shadow:
                case VisibilityRule::building:
                    latched[j] = !occludes(scenario_.map, ego.position, s->position, boxes);
                    break;
                case VisibilityRule::overtake_trigger:
                    latched[j] = trigger_x_ && ego.position.x >= *trigger_x_;
                    break;
                case VisibilityRule::none:
                    break;
            }
        }
        if (latched[j] && s) {
            obs.visible.vehicles[entity->id] = *s;
        }
    }
    obs.site_visible = latched;
    return obs;
}

std::string outcome_name(Outcome o) {
    switch (o) {
        case Outcome::completed:
            return "completed";
        case Outcome::collision:
            return "collision";
        case Outcome::timeout:
            return "timeout";
    }
    return "timeout";
}

RunRecord run_trial(TrialContext& context, Method method, const RunOptions& options) {
    const Scenario& sc = context.scenario();
    const RoadMap& map = sc.map;
    const Priors priors = Priors::uniform(map, options.site_prior);
    const ManeuverParams& params = options.planner.params;
    const auto support = method_support(method, map, map.goals().front().id, sc.true_z).second;

    RunRecord rec;
    rec.scenario = sc.id;
    rec.method = method;
    rec.seed = sc.seed;
    rec.ego.vehicle_id = sc.ego().id;
    rec.ego.states.push_back(sc.ego().initial);

    std::map<std::string, const ScenarioAgent*> agents;
    for (const auto& a : sc.agents) {
        agents[a.id] = &a;
    }
    std::vector<bool> latched(map.site_count(), false);
    std::map<std::string, JointBelief> frozen;
    std::map<std::string, bool> closed;

    double t = 0.0;
    for (int k = 0;; ++k) {
        const VehicleState ego = rec.ego.back();
        if (t >= sc.duration - 1e-9) {
            rec.outcome = Outcome::timeout;
            rec.duration = t;
            break;
        }
        const Observation obs = context.observe(ego, t, latched);

        std::vector<JointBelief> all_beliefs;
        std::vector<JointBelief> present;
        for (const auto* v : sc.observed()) {
            const bool here = context.present(v->id, t);
            if (!closed[v->id]) {
                if (here) {
                    frozen[v->id] = run_baseline(method, context.observed_prefix(v->id, t), map, v->goal, sc.true_z,
                                                 priors, context.cache(), options.beta);
                    // The first observation that rules out a goal is the last one used.
                    closed[v->id] = !context.all_goals_reachable(v->id, t);
                } else if (frozen.contains(v->id)) {
                    closed[v->id] = true;
                }
            }
            if (!frozen.contains(v->id)) {
                continue;
            }
            JointBelief b = frozen.at(v->id);
            for (std::size_t j = 0; j < latched.size(); ++j) {
                if (latched[j]) {
                    b = condition_on_site(b, j, true);
                }
            }
            all_beliefs.push_back(b);
            if (here) {
                rec.beliefs.push_back(BeliefRow{t, v->id, true_z_probability(b, sc.true_z), true_goal_probability(b, v->goal)});
                rec.posteriors.push_back(b);
                present.push_back(std::move(b));
            }
        }

        EgoSearchInput in;
        in.ego = ego;
        in.t = t;
        in.goal = &sc.ego_goal;
        in.map = &map;
        in.weights = options.weights;
        in.params = params;
        in.zs = all_beliefs.empty() ? support : all_beliefs.front().zs;
        if (all_beliefs.empty()) {
            for (const auto& z : in.zs) {
                in.merged_z.push_back(priors.p_z(z));
            }
        } else {
            in.merged_z = merge_beliefs(all_beliefs);
        }
        in.beliefs = present;
        in.predict = [&](std::size_t i, const std::string& goal, const OccludedFactorInstantiation& z) {
            const std::string& id = present[i].vehicle_id;
            const VehicleState s = *context.state_at(id, t);
            if (!closed[id]) {
                if (const auto& plan = context.cache().plan(id, s, t, map.goal(goal), z)) {
                    return OtherAgent{plan->trajectory, agents.at(id)->box};
                }
            }
            return constant_velocity_prediction(id, s, t, kPredictionHorizon, map, agents.at(id)->box);
        };
        in.visible_sites = latched;
        std::vector<OtherAgent> reactive;
        for (const auto& [id, s] : obs.visible.vehicles) {
            if (id == sc.ego().id) {
                continue;
            }
            OtherAgent cv = constant_velocity_prediction(id, s, t, kPredictionHorizon, map, agents.at(id)->box);
            if (agents.at(id)->role != Role::observed) {
                in.visible_traffic.push_back(cv);
            }
            reactive.push_back(std::move(cv));
        }
        if (method == Method::map) {
            in.fixed = map_determinization(present, in.zs, in.merged_z, in.predict);
        }

        MctsConfig config = options.mcts;
        config.seed = mix_seed(options.mcts.seed, sc.seed, static_cast<std::uint64_t>(k));

        Trajectory segment;
        RolloutStatus status = RolloutStatus::completed;
        try {
            const EgoSearchResult chosen = search(in, config);
            if (options.keep_log) {
                rec.log.push_back(format_search_log(t, chosen.search));
            }
            RolloutOptions ro;
            ro.start_time = t;
            ro.goal = &sc.ego_goal;
            ro.others = reactive;
            ro.vehicle_id = sc.ego().id;
            ro.params = params;
            ro.step_limit = static_cast<std::size_t>(std::llround(kControlPeriod / kDt));
            ro.stop_on_collision = false;
            const RolloutResult r = rollout(chosen.macro, ego, map, ro);
            segment = r.trajectory;
            status = r.status;
        } catch (const MctsError& e) {
            if (options.keep_log) {
                rec.log.push_back("t=" + std::to_string(t) + " no macro: " + e.what());
            }
        }
        if (segment.states.empty()) {
            segment.vehicle_id = sc.ego().id;
            segment.start_time = t;
            segment.states = {ego};
        }
        // A macro that ends inside the period is followed by a fresh search from where it ended,
        // with the same beliefs; lane following or braking if that search has nothing to offer.
        const std::size_t period_steps = static_cast<std::size_t>(std::llround(kControlPeriod / kDt));
        while (status == RolloutStatus::completed && segment.states.size() <= period_steps) {
            const VehicleState s = segment.back();
            std::optional<MacroAction> cont;
            try {
                EgoSearchInput again = in;
                again.ego = s;
                again.t = segment.end_time();
                cont = search(again, config).macro;
            } catch (const MctsError&) {
                cont = instantiate_macro("continue_lane", s, map, params);
            }
            RolloutResult r;
            if (cont) {
                RolloutOptions ro;
                ro.start_time = segment.end_time();
                ro.goal = &sc.ego_goal;
                ro.others = reactive;
                ro.vehicle_id = sc.ego().id;
                ro.params = params;
                ro.step_limit = period_steps + 1 - segment.states.size();
                ro.stop_on_collision = false;
                r = rollout(*cont, s, map, ro);
            }
            if (r.trajectory.states.size() < 2) {
                r.trajectory.start_time = segment.end_time();
                r.trajectory.states = {s};
                while (r.trajectory.states.size() + segment.states.size() <= period_steps + 1) {
                    const VehicleState& b = r.trajectory.back();
                    r.trajectory.states.push_back(step(b, -params.stop_decel, Frame{b.position, b.heading, 0.0}, kDt));
                }
                r.status = RolloutStatus::completed;
            }
            segment = concat(segment, r.trajectory);
            status = r.status;
        }

        std::optional<double> hit;
        for (std::size_t i = 1; i < segment.states.size() && !hit; ++i) {
            const double ti = t + kDt * static_cast<double>(i);
            for (const auto& [id, truth] : context.truth()) {
                const auto j = truth.trajectory.index_at(ti);
                if (j && collides(segment.states[i], sc.ego().box, truth.trajectory.states[*j], truth.box)) {
                    hit = ti;
                    segment.states.resize(i + 1);
                    break;
                }
            }
        }
        rec.ego = concat(rec.ego, segment);
        t = rec.ego.end_time();
        if (hit) {
            rec.outcome = Outcome::collision;
            rec.duration = *hit;
            break;
        }
        if (status == RolloutStatus::goal_reached || distance(rec.ego.back().position, sc.ego_goal.location) <= sc.ego_goal.radius) {
            rec.outcome = Outcome::completed;
            rec.duration = t;
            break;
        }
    }
    return rec;
}

}  // namespace gofi
