#include "gofi/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gofi {

double Priors::p_goal(const std::string& id) const {
    const auto it = goal_prior.find(id);
    if (it == goal_prior.end()) {
        throw InferenceError("no prior for goal '" + id + "'");
    }
    return it->second;
}

double Priors::p_z(const OccludedFactorInstantiation& z) const {
    if (z.bits.size() != site_prior.size()) {
        throw InferenceError("instantiation length does not match the number of site priors");
    }
    double p = 1.0;
    for (std::size_t j = 0; j < z.bits.size(); ++j) {
        p *= z.bits[j] ? site_prior[j] : 1.0 - site_prior[j];
    }
    return p;
}

void Priors::validate() const {
    double total = 0.0;
    for (const auto& [id, p] : goal_prior) {
        if (p < 0.0) {
            throw InferenceError("negative prior for goal '" + id + "'");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw InferenceError("goal prior sums to " + std::to_string(total));
    }
    for (double p : site_prior) {
        if (p < 0.0 || p > 1.0) {
            throw InferenceError("site prior outside [0, 1]");
        }
    }
}

Priors Priors::uniform(const RoadMap& map, double site_prior) {
    Priors p;
    const double share = 1.0 / static_cast<double>(map.goals().size());
    for (const auto& g : map.goals()) {
        p.goal_prior[g.id] = share;
    }
    p.site_prior.assign(map.site_count(), site_prior);
    p.validate();
    return p;
}

double JointBelief::total() const { return std::accumulate(entries.begin(), entries.end(), 0.0); }

std::optional<std::size_t> JointBelief::goal_index(const std::string& id) const {
    const auto it = std::find(goals.begin(), goals.end(), id);
    if (it == goals.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - goals.begin());
}

std::optional<std::size_t> JointBelief::z_index(const OccludedFactorInstantiation& z) const {
    const auto it = std::find(zs.begin(), zs.end(), z);
    if (it == zs.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - zs.begin());
}

double boltzmann(double c_star, double c_plus, double beta) {
    return std::min(1.0, std::exp(beta * (c_star - c_plus)));
}

const std::optional<PlanResult>& PlanCache::plan(const std::string& vehicle, const VehicleState& state, double t,
                                                 const GoalDef& goal, const OccludedFactorInstantiation& z) {
    Key key{vehicle, std::llround(t / kDt), goal.id, z.index()};
    {
        std::lock_guard lock(mutex_);
        const auto it = plans_.find(key);
        if (it != plans_.end()) {
            return it->second;
        }
    }
    auto result = plan_optimal(state, t, goal, z, map_, weights_, options_, {}, vehicle);
    std::lock_guard lock(mutex_);
    return plans_.try_emplace(key, std::move(result)).first->second;
}

LikelihoodTerms likelihood_terms(const Trajectory& observed, const GoalDef& g, const OccludedFactorInstantiation& z,
                                 PlanCache& cache, double beta) {
    if (observed.states.empty()) {
        throw InferenceError("likelihood: observed trajectory is empty");
    }
    LikelihoodTerms out;
    const auto& optimal = cache.plan(observed.vehicle_id, observed.states.front(), observed.start_time, g, z);
    if (!optimal) {
        return out;
    }
    out.c_star = optimal->cost;
    const auto& completion = cache.plan(observed.vehicle_id, observed.back(), observed.end_time(), g, z);
    if (!completion) {
        return out;
    }
    const Trajectory full = concat(observed, completion->trajectory);
    if (full.states.size() < 2) {
        out.c_plus = 0.0;
    } else {
        out.c_plus = cost_of(full, cache.weights());
    }
    out.value = boltzmann(*out.c_star, *out.c_plus, beta);
    return out;
}

double likelihood(const Trajectory& observed, const GoalDef& g, const OccludedFactorInstantiation& z,
                  const RoadMap& map, const CostWeights& weights, double beta, const PlannerOptions& options) {
    PlanCache cache(map, weights, options);
    return likelihood_terms(observed, g, z, cache, beta).value;
}

JointBelief posterior(const std::string& vehicle_id, const LikelihoodTable& table, const Priors& priors, double beta) {
    if (table.goals.empty() || table.zs.empty()) {
        throw InferenceError("posterior needs at least one goal and one instantiation");
    }
    JointBelief b;
    b.vehicle_id = vehicle_id;
    b.goals = table.goals;
    b.zs = table.zs;
    b.beta = beta;
    for (const auto& z : table.zs) {
        b.z_prior.push_back(priors.p_z(z));
    }
    b.entries.resize(b.goals.size() * b.zs.size());
    double goal_mass = 0.0;
    for (const auto& g : b.goals) {
        goal_mass += priors.p_goal(g);
    }
    double z_mass = std::accumulate(b.z_prior.begin(), b.z_prior.end(), 0.0);
    double total = 0.0;
    for (std::size_t gi = 0; gi < b.goals.size(); ++gi) {
        for (std::size_t zi = 0; zi < b.zs.size(); ++zi) {
            const double l = std::max(table.at(gi, zi), kLikelihoodFloor);
            b.at(gi, zi) = l * priors.p_goal(b.goals[gi]) * b.z_prior[zi];
            total += b.at(gi, zi);
        }
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        if (!(goal_mass > 0.0) || !(z_mass > 0.0)) {
            throw InferenceError("prior assigns no mass to the supported goals and instantiations");
        }
        for (std::size_t gi = 0; gi < b.goals.size(); ++gi) {
            for (std::size_t zi = 0; zi < b.zs.size(); ++zi) {
                b.at(gi, zi) = priors.p_goal(b.goals[gi]) / goal_mass * b.z_prior[zi] / z_mass;
            }
        }
        return b;
    }
    for (double& e : b.entries) {
        e /= total;
    }
    return b;
}

LikelihoodTable likelihood_table(const Trajectory& observed, const std::vector<GoalDef>& goals,
                                 const std::vector<OccludedFactorInstantiation>& zs, PlanCache& cache, double beta) {
    LikelihoodTable t;
    for (const auto& g : goals) {
        t.goals.push_back(g.id);
    }
    t.zs = zs;
    for (const auto& g : goals) {
        for (const auto& z : zs) {
            t.values.push_back(likelihood_terms(observed, g, z, cache, beta).value);
        }
    }
    return t;
}

JointBelief gofi(const Trajectory& observed, const std::vector<GoalDef>& goals,
                 const std::vector<OccludedFactorInstantiation>& zs, const Priors& priors, PlanCache& cache,
                 double beta) {
    return posterior(observed.vehicle_id, likelihood_table(observed, goals, zs, cache, beta), priors, beta);
}

std::vector<double> marginal_z(const JointBelief& belief) {
    std::vector<double> out(belief.zs.size(), 0.0);
    for (std::size_t gi = 0; gi < belief.goals.size(); ++gi) {
        for (std::size_t zi = 0; zi < belief.zs.size(); ++zi) {
            out[zi] += belief.at(gi, zi);
        }
    }
    return out;
}

std::vector<double> conditional_goal(const JointBelief& belief, std::size_t z) {
    const double pz = marginal_z(belief).at(z);
    if (!(pz > 0.0)) {
        throw InferenceError("conditional_goal: instantiation '" + belief.zs[z].label() + "' has zero probability");
    }
    std::vector<double> out(belief.goals.size());
    for (std::size_t gi = 0; gi < belief.goals.size(); ++gi) {
        out[gi] = belief.at(gi, z) / pz;
    }
    return out;
}

std::vector<double> merge_beliefs(const std::vector<JointBelief>& beliefs) {
    if (beliefs.empty()) {
        throw InferenceError("merge_beliefs needs at least one belief");
    }
    const auto& zs = beliefs.front().zs;
    const auto& prior = beliefs.front().z_prior;
    for (const auto& b : beliefs) {
        if (b.zs != zs) {
            throw InferenceError("merge_beliefs: beliefs range over different instantiation sets");
        }
        for (std::size_t i = 0; i < prior.size(); ++i) {
            if (std::abs(b.z_prior[i] - prior[i]) > 1e-12) {
                throw InferenceError("merge_beliefs: beliefs use different site priors");
            }
        }
    }
    std::vector<double> merged = prior;
    for (const auto& b : beliefs) {
        const auto m = marginal_z(b);
        double total = 0.0;
        for (std::size_t i = 0; i < merged.size(); ++i) {
            // The marginal divided by p(z) is proportional to the vehicle's goal-averaged likelihood.
            merged[i] = prior[i] > 0.0 ? merged[i] * m[i] / prior[i] : 0.0;
            total += merged[i];
        }
        if (!(total > 0.0)) {
            throw InferenceError("merge_beliefs: beliefs share no supported instantiation");
        }
        for (double& v : merged) {
            v /= total;
        }
    }
    return merged;
}

JointBelief condition_on_site(const JointBelief& belief, std::size_t site, bool present) {
    JointBelief out = belief;
    double total = 0.0;
    for (std::size_t zi = 0; zi < out.zs.size(); ++zi) {
        const bool keep = site < out.zs[zi].bits.size() && out.zs[zi].bits[site] == present;
        for (std::size_t gi = 0; gi < out.goals.size(); ++gi) {
            if (!keep) {
                out.at(gi, zi) = 0.0;
            }
            total += out.at(gi, zi);
        }
    }
    if (!(total > 0.0)) {
        // The support excludes the observed value: spread the goal marginal over the agreeing instantiations.
        std::vector<std::size_t> agreeing;
        for (std::size_t zi = 0; zi < out.zs.size(); ++zi) {
            if (site < out.zs[zi].bits.size() && out.zs[zi].bits[site] == present) {
                agreeing.push_back(zi);
            }
        }
        if (agreeing.empty()) {
            return belief;
        }
        for (std::size_t gi = 0; gi < out.goals.size(); ++gi) {
            double pg = 0.0;
            for (std::size_t zi = 0; zi < belief.zs.size(); ++zi) {
                pg += belief.at(gi, zi);
            }
            for (std::size_t zi : agreeing) {
                out.at(gi, zi) = pg / static_cast<double>(agreeing.size());
            }
        }
        return out;
    }
    for (double& e : out.entries) {
        e /= total;
    }
    return out;
}

Method parse_method(const std::string& name) {
    if (name == "gofi") {
        return Method::gofi;
    }
    if (name == "gr_only") {
        return Method::gr_only;
    }
    if (name == "of_oracle") {
        return Method::of_oracle;
    }
    if (name == "goal_oracle") {
        return Method::goal_oracle;
    }
    if (name == "map") {
        return Method::map;
    }
    throw InferenceError("unknown method '" + name + "'");
}

std::string method_name(Method m) {
    switch (m) {
        case Method::gofi:
            return "gofi";
        case Method::gr_only:
            return "gr_only";
        case Method::of_oracle:
            return "of_oracle";
        case Method::goal_oracle:
            return "goal_oracle";
        case Method::map:
            return "map";
    }
    return "unknown";
}

std::pair<std::vector<GoalDef>, std::vector<OccludedFactorInstantiation>> method_support(
    Method method, const RoadMap& map, const std::string& true_goal, const OccludedFactorInstantiation& true_z) {
    std::vector<GoalDef> goals = map.goals();
    std::vector<OccludedFactorInstantiation> zs = all_instantiations(map.site_count());
    switch (method) {
        case Method::gr_only:
            zs = {OccludedFactorInstantiation::from_index(0, map.site_count())};
            break;
        case Method::of_oracle:
            zs = {true_z};
            break;
        case Method::goal_oracle:
            goals = {map.goal(true_goal)};
            break;
        case Method::gofi:
        case Method::map:
            break;
    }
    return {goals, zs};
}

JointBelief run_baseline(Method method, const Trajectory& observed, const RoadMap& map, const std::string& true_goal,
                         const OccludedFactorInstantiation& true_z, const Priors& priors, PlanCache& cache,
                         double beta) {
    const auto [goals, zs] = method_support(method, map, true_goal, true_z);
    return gofi(observed, goals, zs, priors, cache, beta);
}

std::pair<std::size_t, std::size_t> map_selection(const JointBelief& belief) {
    const auto mz = marginal_z(belief);
    std::size_t zi = 0;
    for (std::size_t i = 1; i < mz.size(); ++i) {
        if (mz[i] > mz[zi] || (mz[i] == mz[zi] && belief.zs[i].label() < belief.zs[zi].label())) {
            zi = i;
        }
    }
    const auto cg = conditional_goal(belief, zi);
    std::size_t gi = 0;
    for (std::size_t i = 1; i < cg.size(); ++i) {
        if (cg[i] > cg[gi] || (cg[i] == cg[gi] && belief.goals[i] < belief.goals[gi])) {
            gi = i;
        }
    }
    return {gi, zi};
}

}  // namespace gofi
