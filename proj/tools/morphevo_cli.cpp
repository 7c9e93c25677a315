// Command-line driver: run the experiment matrix, summarize, plot, or
// simulate a single body.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "morphevo/experiment.hpp"
#include "morphevo/simd/kernels.hpp"
#include "morphevo/simulator.hpp"

using namespace morphevo;
namespace fs = std::filesystem;

namespace {

nlohmann::json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    return nlohmann::json::parse(in);
}

struct SimulateArgs {
    std::string genotype_file;
    std::string params_file;
    std::uint64_t seed = 1;
    int num_sets = 1;
    std::string terrain = "flat";
    double duration = 30.0;
    std::string trajectory;
};

int do_simulate(const SimulateArgs& a)
{
    Rng rng = make_rng({a.seed});
    Genotype g = a.genotype_file.empty() ? random_genotype(rng, 5, 10, a.num_sets)
                                         : genotype_from_json(read_json(a.genotype_file));
    ControllerParams params;
    if (a.params_file.empty()) {
        int k = 1;
        for (const auto& m : develop(g).modules)
            k = std::max(k, m.controller_set + 1);
        std::vector<double> x(static_cast<std::size_t>(k * kParamsPerSet));
        for (auto& v : x)
            v = uniform01(rng);
        params = vector_to_params(x, k);
    } else {
        params = controller_from_json(read_json(a.params_file));
    }

    WorldConfig world;
    world.duration = a.duration;
    world.record_trajectory = !a.trajectory.empty();
    TerrainSpec terrain;
    terrain.kind = terrain_kind_from_string(a.terrain);

    const auto result = simulate(develop(g), params, terrain, world);
    if (!a.trajectory.empty()) {
        std::ofstream out(a.trajectory);
        out << "t,x_core,z_core\n";
        char buf[96];
        for (const auto& s : result.trajectory) {
            std::snprintf(buf, sizeof buf, "%.6f,%.9g,%.9g\n", s.t, s.x, s.z);
            out << buf;
        }
        if (!out)
            throw std::runtime_error("cannot write " + a.trajectory);
    }
    nlohmann::json report = {
        {"genotype", to_json(g)},
        {"controller", to_json(params)},
        {"fitness", result.diverged ? nlohmann::json(nullptr) : nlohmann::json(result.fitness)},
        {"diverged", result.diverged},
        {"contact_steps", result.contact_steps},
    };
    std::cout << report.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Morphology evolution with per-body controller learning"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    int workers = default_workers();
    long threshold = -1;

    auto* run = app.add_subcommand("run", "Run (or resume) every cell of an experiment config");
    run->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory")->capture_default_str();
    run->add_option("--workers", workers, "parallel runs")->capture_default_str()->check(CLI::PositiveNumber);

    auto* summarize = app.add_subcommand("summarize", "Write curves, threshold values and rank-sum tests");
    summarize->add_option("--out", out_dir, "output directory")->capture_default_str();
    summarize->add_option("--threshold", threshold, "evaluation threshold (default: from config)");

    auto* plot = app.add_subcommand("plot", "Render SVG plots from a summary");
    plot->add_option("--out", out_dir, "output directory")->capture_default_str();

    auto* validate = app.add_subcommand("validate", "Check a config file and print the resolved form");
    validate->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);

    SimulateArgs sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "Simulate one body and print its fitness");
    simulate_cmd->add_option("--genotype", sim.genotype_file, "genotype JSON (default: random from --seed)");
    simulate_cmd->add_option("--params", sim.params_file, "controller JSON (default: random from --seed)");
    simulate_cmd->add_option("--seed", sim.seed)->capture_default_str();
    simulate_cmd->add_option("--num-sets", sim.num_sets, "controller sets for a random genotype")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--terrain", sim.terrain)->capture_default_str()->check(CLI::IsMember({"flat", "hills"}));
    simulate_cmd->add_option("--duration", sim.duration, "seconds")->capture_default_str();
    simulate_cmd->add_option("--trajectory", sim.trajectory, "write core trajectory CSV here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const int n = cmd_run(config_path, out_dir, workers);
            std::cerr << "completed " << n << " run(s) in " << out_dir << " (simd: "
                      << simd::to_string(simd::active_kernels().isa) << ")\n";
        } else if (*summarize) {
            if (threshold < 0)
                threshold = load_config(fs::path(out_dir) / "config.json").threshold_fevals;
            const auto report = cmd_summarize(out_dir, threshold);
            for (const auto& p : report.written)
                std::cout << p.string() << "\n";
            for (const auto& p : report.problems)
                std::cerr << "warning: " << p << "\n";
        } else if (*plot) {
            for (const auto& p : cmd_plot(out_dir))
                std::cout << p.string() << "\n";
        } else if (*validate) {
            std::cout << to_json(load_config(config_path)).dump(2) << "\n";
        } else if (*simulate_cmd) {
            return do_simulate(sim);
        }
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
