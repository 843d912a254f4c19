#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "gofi/planner.hpp"

namespace gofi {

class InferenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Floor applied to likelihoods before normalisation.
inline constexpr double kLikelihoodFloor = 1e-300;

struct Priors {
    std::map<std::string, double> goal_prior;
    std::vector<double> site_prior;

    /// Uniform over the map's goals, the same presence prior at every site.
    static Priors uniform(const RoadMap& map, double site_prior = 0.1);
    double p_goal(const std::string& id) const;
    double p_z(const OccludedFactorInstantiation& z) const;
    void validate() const;
};

/// Posterior table over (goal, instantiation), stored goal-major.
struct JointBelief {
    std::string vehicle_id;
    std::vector<std::string> goals;
    std::vector<OccludedFactorInstantiation> zs;
    std::vector<double> z_prior;  // p(z) for each entry of zs
    std::vector<double> entries;  // entries[g * zs.size() + z]
    double beta = 1.0;

    double at(std::size_t g, std::size_t z) const { return entries[g * zs.size() + z]; }
    double& at(std::size_t g, std::size_t z) { return entries[g * zs.size() + z]; }
    double total() const;
    std::optional<std::size_t> goal_index(const std::string& id) const;
    std::optional<std::size_t> z_index(const OccludedFactorInstantiation& z) const;
};

/// Likelihood values aligned with a goal list and an instantiation list.
struct LikelihoodTable {
    std::vector<std::string> goals;
    std::vector<OccludedFactorInstantiation> zs;
    std::vector<double> values;  // values[g * zs.size() + z]

    double at(std::size_t g, std::size_t z) const { return values[g * zs.size() + z]; }
};

/// exp(beta (c* - c+)), capped at 1.
double boltzmann(double c_star, double c_plus, double beta);

/// Plans keyed by (vehicle, start step, goal, instantiation). Shared across methods and threads.
class PlanCache {
public:
    using Key = std::tuple<std::string, long long, std::string, std::uint32_t>;

    PlanCache(const RoadMap& map, CostWeights weights, PlannerOptions options)
        : map_(map), weights_(weights), options_(std::move(options)) {}

    /// Optimal plan for `vehicle` from `state` at time `t` toward `goal` under `z`.
    const std::optional<PlanResult>& plan(const std::string& vehicle, const VehicleState& state, double t,
                                          const GoalDef& goal, const OccludedFactorInstantiation& z);

    const RoadMap& map() const { return map_; }
    const CostWeights& weights() const { return weights_; }
    const PlannerOptions& options() const { return options_; }

private:
    const RoadMap& map_;
    CostWeights weights_;
    PlannerOptions options_;
    std::mutex mutex_;
    std::map<Key, std::optional<PlanResult>> plans_;
};

struct LikelihoodTerms {
    std::optional<double> c_star;
    std::optional<double> c_plus;
    double value = 0.0;
};

/// Inverse-planning likelihood of the observed trajectory under (g, z).
LikelihoodTerms likelihood_terms(const Trajectory& observed, const GoalDef& g, const OccludedFactorInstantiation& z,
                                 PlanCache& cache, double beta);
double likelihood(const Trajectory& observed, const GoalDef& g, const OccludedFactorInstantiation& z,
                  const RoadMap& map, const CostWeights& weights, double beta, const PlannerOptions& options = {});

/// Bayes rule over a likelihood table; falls back to the prior product when all mass vanishes.
JointBelief posterior(const std::string& vehicle_id, const LikelihoodTable& table, const Priors& priors, double beta);

LikelihoodTable likelihood_table(const Trajectory& observed, const std::vector<GoalDef>& goals,
                                 const std::vector<OccludedFactorInstantiation>& zs, PlanCache& cache, double beta);

JointBelief gofi(const Trajectory& observed, const std::vector<GoalDef>& goals,
                 const std::vector<OccludedFactorInstantiation>& zs, const Priors& priors, PlanCache& cache,
                 double beta);

std::vector<double> marginal_z(const JointBelief& belief);
std::vector<double> conditional_goal(const JointBelief& belief, std::size_t z);

/// Sequential prior chaining of z-evidence across vehicles, in the given order.
std::vector<double> merge_beliefs(const std::vector<JointBelief>& beliefs);

/// Restricts the belief to instantiations agreeing with an observed site and renormalises.
JointBelief condition_on_site(const JointBelief& belief, std::size_t site, bool present);

enum class Method { gofi, gr_only, of_oracle, goal_oracle, map };

Method parse_method(const std::string& name);
std::string method_name(Method m);

/// Goal list and Z support a method reasons over.
std::pair<std::vector<GoalDef>, std::vector<OccludedFactorInstantiation>> method_support(
    Method method, const RoadMap& map, const std::string& true_goal, const OccludedFactorInstantiation& true_z);

JointBelief run_baseline(Method method, const Trajectory& observed, const RoadMap& map, const std::string& true_goal,
                         const OccludedFactorInstantiation& true_z, const Priors& priors, PlanCache& cache,
                         double beta);

/// (goal index, z index) of the MAP instantiation and its most likely goal; ties go to the smallest label or id.
std::pair<std::size_t, std::size_t> map_selection(const JointBelief& belief);

}  // namespace gofi
