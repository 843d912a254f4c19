#include "gofi/mcts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gofi {

void MctsConfig::validate() const {
    if (iterations < 1) {
        throw MctsError("iterations must be at least 1");
    }
    if (max_depth < 1) {
        throw MctsError("max_depth must be at least 1");
    }
    if (!(r_coll < r_term)) {
        throw MctsError("collision reward must be below the depth-limit reward");
    }
    if (!(ucb_c > 0.0)) {
        throw MctsError("ucb_c must be positive");
    }
}

int SearchNode::total_visits() const {
    int n = 0;
    for (const auto& [name, v] : visit_counts) {
        n += v;
    }
    return n;
}

std::optional<double> SearchNode::max_q() const {
    std::optional<double> best;
    for (const auto& [name, q] : q_values) {
        const auto it = visit_counts.find(name);
        if (it != visit_counts.end() && it->second > 0 && (!best || q > *best)) {
            best = q;
        }
    }
    return best;
}

void backup(const std::vector<std::pair<SearchNode*, std::string>>& path, double r) {
    if (path.empty()) {
        throw MctsError("backup: empty path");
    }
    for (std::size_t i = path.size(); i-- > 0;) {
        SearchNode& node = *path[i].first;
        const std::string& mu = path[i].second;
        const double delta = static_cast<double>(++node.visit_counts[mu]);
        double& q = node.q_values[mu];
        double target = r;
        if (i + 1 < path.size()) {
            target = path[i + 1].first->max_q().value_or(r);
        }
        q += (target - q) / delta;
    }
}

std::string select_ucb(const SearchNode& node, const std::vector<std::string>& actions, double c) {
    if (actions.empty()) {
        throw MctsError("select_ucb: no actions");
    }
    int n_total = 0;
    for (const auto& a : actions) {
        const auto it = node.visit_counts.find(a);
        const int n = it == node.visit_counts.end() ? 0 : it->second;
        if (n == 0) {
            return a;
        }
        n_total += n;
    }
    const double log_n = std::log(static_cast<double>(n_total));
    std::string best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const auto& a : actions) {
        const double n = static_cast<double>(node.visit_counts.at(a));
        const double score = node.q_values.at(a) + c * std::sqrt(log_n / n);
        if (score > best_score) {
            best_score = score;
            best = a;
        }
    }
    return best;
}

SearchResult run_search(SearchModel& model, const MctsConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    SearchNode root;
    SearchResult result;
    std::vector<std::pair<SearchNode*, std::string>> path;
    for (int it = 0; it < config.iterations; ++it) {
        ++result.determinizations[model.begin_iteration(rng)];
        path.clear();
        SearchNode* node = &root;
        double reward = config.r_term;
        for (int d = 0; d < config.max_depth; ++d) {
            const auto actions = model.actions();
            if (actions.empty()) {
                if (path.empty()) {
                    throw MctsError("no applicable macro-action at the search root");
                }
                break;
            }
            const std::string mu = select_ucb(*node, actions, config.ucb_c);
            path.emplace_back(node, mu);
            const bool last = d == config.max_depth - 1;
            if (const auto r = model.apply(mu, last)) {
                reward = *r;
                break;
            }
            if (last) {
                break;
            }
            auto& child = node->children[mu];
            if (!child) {
                child = std::make_unique<SearchNode>();
                child->depth = d + 1;
            }
            node = child.get();
        }
        backup(path, reward);
    }
    std::optional<double> best_q;
    for (const auto& [name, q] : root.q_values) {
        if (root.visit_counts[name] > 0 && (!best_q || q > *best_q)) {
            best_q = q;
            result.best = name;
        }
    }
    result.root_q = root.q_values;
    result.root_visits = root.visit_counts;
    return result;
}

std::string format_search_log(double t, const SearchResult& result) {
    std::ostringstream out;
    out << "t=" << t << " chosen=" << result.best;
    for (const auto& [name, q] : result.root_q) {
        out << ' ' << name << ":Q=" << q << ",n=" << result.root_visits.at(name);
    }
    out << " determinizations";
    for (const auto& [label, n] : result.determinizations) {
        out << ' ' << label << ':' << n;
    }
    return out.str();
}

std::string Determinization::label() const {
    std::string s = "z=" + z.label();
    for (const auto& g : goals) {
        s += "," + g;
    }
    return s;
}

Determinization sample_determinization(const std::vector<JointBelief>& beliefs,
                                       const std::vector<OccludedFactorInstantiation>& zs,
                                       const std::vector<double>& merged_z, std::mt19937_64& rng,
                                       const TrajectoryPredictor& predict) {
    if (zs.empty() || zs.size() != merged_z.size()) {
        throw MctsError("sample_determinization: merged belief does not match the instantiation list");
    }
    std::discrete_distribution<std::size_t> pick_z(merged_z.begin(), merged_z.end());
    Determinization d;
    d.z_index = pick_z(rng);
    d.z = zs[d.z_index];
    for (std::size_t i = 0; i < beliefs.size(); ++i) {
        const auto zi = beliefs[i].z_index(d.z);
        if (!zi) {
            throw MctsError("sample_determinization: belief for '" + beliefs[i].vehicle_id +
                            "' does not cover instantiation " + d.z.label());
        }
        const auto cond = conditional_goal(beliefs[i], *zi);
        std::discrete_distribution<std::size_t> pick_g(cond.begin(), cond.end());
        d.goals.push_back(beliefs[i].goals[pick_g(rng)]);
        if (predict) {
            d.agents.push_back(predict(i, d.goals.back(), d.z));
        }
    }
    return d;
}

double goal_reward(const Trajectory& ego, const CostWeights& weights, const MctsConfig& config) {
    if (ego.states.size() < 2) {
        return 0.0;
    }
    Trajectory idle;
    idle.dt = ego.dt;
    idle.states.assign(static_cast<std::size_t>(std::llround(60.0 / ego.dt)) + 1, ego.states.front());
    for (auto& s : idle.states) {
        s.speed = 0.0;
        s.acceleration = 0.0;
    }
    const double cap = cost_of(idle, weights);
    return config.r_term * std::min(1.0, cost_of(ego, weights) / cap);
}

namespace {

struct SimState {
    VehicleState state;
    Trajectory trajectory;  // ego motion since the search root
};

struct Step {
    SimState next;
    std::optional<double> reward;
};

struct World {
    Determinization det;
    std::vector<OtherAgent> others;
    std::vector<OtherAgent> hazards;
};

class EgoModel : public SearchModel {
public:
    EgoModel(const EgoSearchInput& in, const MctsConfig& config) : in_(in), config_(config) {
        root_.state = in.ego;
        root_.trajectory.vehicle_id = "ego";
        root_.trajectory.start_time = in.t;
        root_.trajectory.states.push_back(in.ego);
    }

    std::string begin_iteration(std::mt19937_64& rng) override {
        Determinization d = in_.fixed ? *in_.fixed : sample_determinization(in_.beliefs, in_.zs, in_.merged_z, rng, in_.predict);
        const std::string label = d.label();
        auto it = worlds_.find(label);
        if (it == worlds_.end()) {
            it = worlds_.emplace(label, build_world(std::move(d))).first;
        }
        world_ = &it->second;
        current_ = root_;
        key_ = label;
        return label;
    }

    std::vector<std::string> actions() override {
        std::vector<std::string> names;
        for (const auto& [name, macro] : macros_at(key_, current_.state)) {
            names.push_back(name);
        }
        return names;
    }

    std::optional<double> apply(const std::string& action, bool last_level) override {
        const std::string key = key_ + "/" + action;
        auto it = steps_.find(key);
        if (it == steps_.end()) {
            it = steps_.emplace(key, simulate(action, last_level)).first;
        }
        current_ = it->second.next;
        key_ = key;
        return it->second.reward;
    }

private:
    World build_world(Determinization d) const {
        World w;
        for (const auto& a : d.agents) {
            if (!a.trajectory.states.empty()) {
                w.others.push_back(a);
            }
        }
        w.others.insert(w.others.end(), in_.visible_traffic.begin(), in_.visible_traffic.end());
        const auto& sites = in_.map->occlusion_sites();
        for (std::size_t j = 0; j < d.z.bits.size(); ++j) {
            if (!d.z.bits[j]) {
                continue;
            }
            if (j < in_.visible_sites.size() && in_.visible_sites[j]) {
                continue;
            }
            w.hazards.push_back(
                OtherAgent{hypothesis_prediction(sites[j], kHorizon, *in_.map), BodyBox{sites[j].length, sites[j].width}});
        }
        w.det = std::move(d);
        return w;
    }

    const std::vector<std::pair<std::string, MacroAction>>& macros_at(const std::string& key, const VehicleState& s) {
        auto it = macros_.find(key);
        if (it == macros_.end()) {
            std::vector<std::pair<std::string, MacroAction>> list;
            for (const auto& name : macro_library()) {
                if (auto m = instantiate_macro(name, s, *in_.map, in_.params)) {
                    list.emplace_back(name, std::move(*m));
                }
            }
            it = macros_.emplace(key, std::move(list)).first;
        }
        return it->second;
    }

    Step simulate(const std::string& action, bool last_level) {
        const auto& list = macros_at(key_, current_.state);
        const auto m = std::find_if(list.begin(), list.end(), [&](const auto& p) { return p.first == action; });
        if (m == list.end()) {
            throw MctsError("macro '" + action + "' is not applicable in the simulated state");
        }
        RolloutOptions ro;
        ro.start_time = current_.trajectory.end_time();
        ro.goal = in_.goal;
        ro.others = world_->others;
        ro.hazards = world_->hazards;
        ro.vehicle_id = "ego";
        ro.params = in_.params;
        const RolloutResult r = rollout(m->second, current_.state, *in_.map, ro);
        Step step;
        step.next.trajectory = concat(current_.trajectory, r.trajectory);
        step.next.state = step.next.trajectory.back();
        switch (r.status) {
            case RolloutStatus::collision:
                step.reward = config_.r_coll;
                break;
            case RolloutStatus::goal_reached:
                step.reward = goal_reward(step.next.trajectory, in_.weights, config_);
                break;
            case RolloutStatus::timed_out:
                step.reward = config_.r_term;
                break;
            case RolloutStatus::completed:
                if (last_level) {
                    step.reward = config_.r_term;
                }
                break;
        }
        return step;
    }

    static constexpr double kHorizon = 130.0;

    const EgoSearchInput& in_;
    const MctsConfig& config_;
    SimState root_;
    SimState current_;
    std::string key_;
    const World* world_ = nullptr;
    std::map<std::string, World> worlds_;
    std::map<std::string, std::vector<std::pair<std::string, MacroAction>>> macros_;
    std::map<std::string, Step> steps_;
};

}  // namespace

EgoSearchResult search(const EgoSearchInput& input, const MctsConfig& config) {
    if (input.goal == nullptr || input.map == nullptr) {
        throw MctsError("search needs an ego goal and a map");
    }
    EgoModel model(input, config);
    EgoSearchResult out;
    out.search = run_search(model, config);
    auto macro = instantiate_macro(out.search.best, input.ego, *input.map, input.params);
    if (!macro) {
        throw MctsError("chosen macro '" + out.search.best + "' is not applicable at the root");
    }
    out.macro = std::move(*macro);
    return out;
}

}  // namespace gofi
