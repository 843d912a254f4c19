#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gofi/simulator.hpp"

namespace gofi {

struct SweepConfig {
    std::vector<std::string> scenarios;
    std::vector<Method> methods;
    std::vector<std::uint64_t> seeds;
    Perception perception = Perception::blind;
    RunOptions options;
    int jobs = 1;
};

struct TrialFailure {
    std::string scenario;
    Method method = Method::gofi;
    std::uint64_t seed = 0;
    std::string what;
};

struct SweepResult {
    Perception perception = Perception::blind;
    std::vector<RunRecord> records;  // ordered by scenario, seed, method as configured
    std::vector<TrialFailure> failures;
    /// Ground-truth trajectories of the non-ego agents per (scenario, seed).
    std::map<std::pair<std::string, std::uint64_t>, std::vector<Trajectory>> others;
};

/// Runs every (scenario, method, seed) trial; one TrialContext per (scenario, seed) job.
/// `progress` is called after each job under a lock.
SweepResult run_sweep(const SweepConfig& config,
                      const std::function<void(const std::string& scenario, std::uint64_t seed)>& progress = {});

struct Interval {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/// Percentile bootstrap of the mean of 0/1 outcomes.
Interval bootstrap_fraction(const std::vector<bool>& hits, int resamples = 1000, double level = 0.95,
                            std::uint64_t seed = 0);

struct SummaryRow {
    std::string scenario;
    Method method = Method::gofi;
    Perception perception = Perception::blind;
    int trials = 0;
    Interval collision_free;
    Interval completed;
};

std::vector<SummaryRow> summarize(const SweepResult& result, int resamples = 1000);

void write_beliefs_csv(std::ostream& out, const std::vector<RunRecord>& records);
void write_outcomes_csv(std::ostream& out, const std::vector<RunRecord>& records);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

/// beliefs.csv, outcomes.csv, summary.csv and trajectories/<scenario>_<method>_<seed>.csv under `dir`.
void write_sweep(const std::filesystem::path& dir, const SweepResult& result);

/// Parses "20" as seeds 0..19 and "3,5,8" or "2-6" as explicit lists.
std::vector<std::uint64_t> parse_seeds(const std::string& text);

}  // namespace gofi
