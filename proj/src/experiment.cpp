#include "gofi/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace gofi {
namespace {

struct Job {
    std::string scenario;
    std::uint64_t seed = 0;
};

struct JobOutput {
    std::vector<RunRecord> records;
    std::vector<TrialFailure> failures;
    std::vector<Trajectory> others;
};

JobOutput run_job(const Job& job, const SweepConfig& config) {
    JobOutput out;
    std::unique_ptr<TrialContext> context;
    try {
        context = std::make_unique<TrialContext>(build_scenario(job.scenario, job.seed, config.perception), config.options);
    } catch (const std::exception& e) {
        for (Method m : config.methods) {
            out.failures.push_back({job.scenario, m, job.seed, e.what()});
        }
        return out;
    }
    for (Method m : config.methods) {
        try {
            out.records.push_back(run_trial(*context, m, config.options));
        } catch (const std::exception& e) {
            out.failures.push_back({job.scenario, m, job.seed, e.what()});
        }
    }
    double end = 0.0;
    for (const auto& r : out.records) {
        end = std::max(end, r.duration);
    }
    for (const auto& [id, agent] : context->truth()) {
        Trajectory traj = agent.trajectory;
        traj.vehicle_id = id;
        while (traj.states.size() > 1 && traj.end_time() > end + 1e-9) {
            traj.states.pop_back();
        }
        out.others.push_back(std::move(traj));
    }
    return out;
}

std::string format(double v) {
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

}  // namespace

SweepResult run_sweep(const SweepConfig& config,
                      const std::function<void(const std::string& scenario, std::uint64_t seed)>& progress) {
    if (config.scenarios.empty() || config.methods.empty() || config.seeds.empty()) {
        throw std::invalid_argument("sweep needs at least one scenario, method and seed");
    }
    std::vector<Job> jobs;
    for (const auto& id : config.scenarios) {
        for (std::uint64_t seed : config.seeds) {
            jobs.push_back({id, seed});
        }
    }
    std::vector<JobOutput> outputs(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex progress_lock;
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            outputs[i] = run_job(jobs[i], config);
            if (progress) {
                std::lock_guard lock(progress_lock);
                progress(jobs[i].scenario, jobs[i].seed);
            }
        }
    };
    const int n = std::clamp(config.jobs, 1, static_cast<int>(jobs.size()));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < n; ++i) {
            pool.emplace_back(worker);
        }
    }

    SweepResult result;
    result.perception = config.perception;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        auto& o = outputs[i];
        std::ranges::move(o.records, std::back_inserter(result.records));
        std::ranges::move(o.failures, std::back_inserter(result.failures));
        result.others[{jobs[i].scenario, jobs[i].seed}] = std::move(o.others);
    }
    return result;
}

Interval bootstrap_fraction(const std::vector<bool>& hits, int resamples, double level, std::uint64_t seed) {
    if (hits.empty()) {
        throw std::invalid_argument("bootstrap of an empty sample");
    }
    const double n = static_cast<double>(hits.size());
    Interval r;
    r.mean = static_cast<double>(std::ranges::count(hits, true)) / n;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, hits.size() - 1);
    std::vector<double> means(static_cast<std::size_t>(resamples));
    for (double& m : means) {
        int k = 0;
        for (std::size_t i = 0; i < hits.size(); ++i) {
            k += hits[pick(rng)] ? 1 : 0;
        }
        m = k / n;
    }
    std::ranges::sort(means);
    const double tail = (1.0 - level) / 2.0;
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(means.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const auto hi = std::min(lo + 1, means.size() - 1);
        return means[lo] + (pos - static_cast<double>(lo)) * (means[hi] - means[lo]);
    };
    r.lo = quantile(tail);
    r.hi = quantile(1.0 - tail);
    return r;
}

std::vector<SummaryRow> summarize(const SweepResult& result, int resamples) {
    std::vector<SummaryRow> rows;
    std::vector<std::pair<std::string, Method>> cells;
    for (const auto& r : result.records) {
        if (std::ranges::find(cells, std::pair{r.scenario, r.method}) == cells.end()) {
            cells.emplace_back(r.scenario, r.method);
        }
    }
    for (const auto& [scenario, method] : cells) {
        std::vector<bool> safe;
        std::vector<bool> done;
        for (const auto& r : result.records) {
            if (r.scenario == scenario && r.method == method) {
                safe.push_back(r.outcome != Outcome::collision);
                done.push_back(r.outcome == Outcome::completed);
            }
        }
        SummaryRow row;
        row.scenario = scenario;
        row.method = method;
        row.perception = result.perception;
        row.trials = static_cast<int>(safe.size());
        row.collision_free = bootstrap_fraction(safe, resamples);
        row.completed = bootstrap_fraction(done, resamples);
        rows.push_back(row);
    }
    return rows;
}

void write_beliefs_csv(std::ostream& out, const std::vector<RunRecord>& records) {
    out << "scenario,seed,t,method,vehicle_id,p_true_z,p_true_goal\n";
    for (const auto& r : records) {
        for (const auto& b : r.beliefs) {
            out << r.scenario << ',' << r.seed << ',' << format(b.t) << ',' << method_name(r.method) << ','
                << b.vehicle_id << ',' << format(b.p_true_z) << ',' << format(b.p_true_goal) << '\n';
        }
    }
}

void write_outcomes_csv(std::ostream& out, const std::vector<RunRecord>& records) {
    out << "scenario,method,seed,outcome,duration_s\n";
    for (const auto& r : records) {
        out << r.scenario << ',' << method_name(r.method) << ',' << r.seed << ',' << outcome_name(r.outcome) << ','
            << format(r.duration) << '\n';
    }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "scenario,method,perception,trials,collision_free,collision_free_lo,collision_free_hi,completed,"
           "completed_lo,completed_hi\n";
    for (const auto& r : rows) {
        out << r.scenario << ',' << method_name(r.method) << ',' << perception_name(r.perception) << ',' << r.trials
            << ',' << format(r.collision_free.mean) << ',' << format(r.collision_free.lo) << ','
            << format(r.collision_free.hi) << ',' << format(r.completed.mean) << ',' << format(r.completed.lo) << ','
            << format(r.completed.hi) << '\n';
    }
}

void write_sweep(const std::filesystem::path& dir, const SweepResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "trajectories");
    auto open = [](const fs::path& p) {
        std::ofstream f(p);
        if (!f) {
            throw std::runtime_error("cannot write " + p.string());
        }
        return f;
    };
    {
        auto f = open(dir / "beliefs.csv");
        write_beliefs_csv(f, result.records);
    }
    {
        auto f = open(dir / "outcomes.csv");
        write_outcomes_csv(f, result.records);
    }
    {
        auto f = open(dir / "summary.csv");
        write_summary_csv(f, summarize(result));
    }
    for (const auto& r : result.records) {
        auto f = open(dir / "trajectories" /
                      (r.scenario + "_" + method_name(r.method) + "_" + std::to_string(r.seed) + ".csv"));
        write_trajectory_csv_header(f);
        write_trajectory_csv(f, r.ego);
        if (const auto it = result.others.find({r.scenario, r.seed}); it != result.others.end()) {
            for (const auto& traj : it->second) {
                write_trajectory_csv(f, traj);
            }
        }
    }
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (s.empty() || used != s.size() || s.front() == '-') {
            throw std::invalid_argument("bad seed specification '" + text + "'");
        }
        return static_cast<std::uint64_t>(v);
    };
    std::vector<std::uint64_t> seeds;
    if (text.find_first_of(",-") == std::string::npos) {
        const auto n = number(text);
        for (std::uint64_t i = 0; i < n; ++i) {
            seeds.push_back(i);
        }
    } else {
        std::stringstream in(text);
        std::string item;
        while (std::getline(in, item, ',')) {
            if (const auto dash = item.find('-'); dash != std::string::npos && dash > 0) {
                const auto a = number(item.substr(0, dash));
                const auto b = number(item.substr(dash + 1));
                if (b < a) {
                    throw std::invalid_argument("bad seed range '" + item + "'");
                }
                for (auto s = a; s <= b; ++s) {
                    seeds.push_back(s);
                }
            } else {
                seeds.push_back(number(item));
            }
        }
    }
    if (seeds.empty()) {
        throw std::invalid_argument("no seeds in '" + text + "'");
    }
    return seeds;
}

}  // namespace gofi
