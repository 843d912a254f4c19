#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "gofi/experiment.hpp"
#include "gofi/oracles.hpp"
#include "gofi/roadmap.hpp"

namespace {

std::vector<std::string> split(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

std::filesystem::path output_dir(const std::string& flag) {
    if (!flag.empty()) {
        return flag;
    }
    if (const char* env = std::getenv("GOFI_SIM_OUT"); env && *env) {
        return env;
    }
    return "out";
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream f(path);
    if (!f) {
        throw std::runtime_error("cannot write " + path.string());
    }
    f << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-loop simulator for goal and occluded-factor inference"};
    app.require_subcommand(1);

    std::string scenarios = "1,2,3,4";
    std::string methods = "gofi,gr_only,of_oracle,goal_oracle,map";
    std::string seeds = "20";
    std::string out;
    std::string perception = "blind";
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    gofi::RunOptions options;
    bool quiet = false;

    auto* run = app.add_subcommand("run", "Run every (scenario, method, seed) trial and write CSVs");
    run->add_option("--scenario", scenarios, "Comma-separated scenario ids (1,2,3,4,2v,4v)")->capture_default_str();
    run->add_option("--method", methods, "Comma-separated methods")->capture_default_str();
    run->add_option("--seeds", seeds, "Seed count N (0..N-1) or a list such as 3,5,7-9")->capture_default_str();
    run->add_option("--jobs", jobs, "Parallel trials")->check(CLI::PositiveNumber);
    run->add_option("--out", out, "Output directory (default $GOFI_SIM_OUT or ./out)");
    run->add_option("--perception", perception, "blind or geometric")
        ->check(CLI::IsMember({"blind", "geometric"}))
        ->capture_default_str();
    run->add_option("--beta", options.beta, "Likelihood temperature")->capture_default_str();
    run->add_option("--mcts-iters", options.mcts.iterations, "MCTS iterations per decision")->capture_default_str();
    run->add_option("--mcts-depth", options.mcts.max_depth, "MCTS maximum depth")->capture_default_str();
    run->add_option("--site-prior", options.site_prior, "Prior that an occlusion site holds an entity")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    run->add_option("--w-time", options.weights.w_time, "Cost weight on duration")->capture_default_str();
    run->add_option("--w-accel", options.weights.w_accel, "Cost weight on acceleration")->capture_default_str();
    run->add_option("--w-jerk", options.weights.w_jerk, "Cost weight on jerk")->capture_default_str();
    run->add_option("--w-curvature", options.weights.w_curvature, "Cost weight on curvature")->capture_default_str();
    run->add_option("--r-collision", options.mcts.r_coll, "MCTS collision reward")->capture_default_str();
    run->add_option("--r-terminal", options.mcts.r_term, "MCTS reward for an unfinished rollout")->capture_default_str();
    run->add_flag("--quiet", quiet, "No progress output");

    std::string oracle_name;
    auto* oracle = app.add_subcommand("oracle", "Write a test oracle fixture");
    oracle->add_option("name", oracle_name, "astar_enum, bayes_table or mcts_dp")->required();
    oracle->add_option("--out", out, "Output directory (default $GOFI_SIM_OUT or ./out)");

    auto* maps = app.add_subcommand("maps", "Export every scenario map as JSON");
    maps->add_option("--out", out, "Output directory (default $GOFI_SIM_OUT or ./out)");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto dir = output_dir(out);
        if (*run) {
            gofi::SweepConfig config;
            config.scenarios = split(scenarios);
            for (const auto& m : split(methods)) {
                config.methods.push_back(gofi::parse_method(m));
            }
            for (const auto& id : config.scenarios) {
                gofi::scenario_map(id);
            }
            config.seeds = gofi::parse_seeds(seeds);
            config.perception = gofi::parse_perception(perception);
            config.options = options;
            config.jobs = jobs;
            const std::size_t total = config.scenarios.size() * config.seeds.size();
            std::size_t done = 0;
            const auto result = gofi::run_sweep(config, [&](const std::string& id, std::uint64_t seed) {
                ++done;
                if (!quiet) {
                    std::cerr << "[" << done << "/" << total << "] scenario " << id << " seed " << seed << '\n';
                }
            });
            gofi::write_sweep(dir, result);
            std::cout << result.records.size() << " trials written to " << dir.string() << '\n';
            if (!result.failures.empty()) {
                std::cerr << result.failures.size() << " trials failed:\n";
                for (const auto& f : result.failures) {
                    std::cerr << "  scenario " << f.scenario << " method " << gofi::method_name(f.method) << " seed "
                              << f.seed << ": " << f.what << '\n';
                }
                return 1;
            }
        } else if (*oracle) {
            const auto fixture = gofi::run_oracle(oracle_name);
            std::filesystem::create_directories(dir);
            write_json(dir / (oracle_name + ".json"), fixture);
            std::cout << "wrote " << (dir / (oracle_name + ".json")).string() << '\n';
        } else if (*maps) {
            std::filesystem::create_directories(dir);
            for (const auto& id : gofi::scenario_ids()) {
                gofi::save_map(gofi::scenario_map(id), dir / ("scenario_" + id + ".json"));
            }
            for (const auto& [name, map] : gofi::oracle_toy_maps()) {
                gofi::save_map(map, dir / (name + ".json"));
            }
            std::cout << "wrote maps to " << dir.string() << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
