#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphevo/evolution.hpp"

namespace morphevo {

/// Configuration problem, message prefixed with "<source>:<line>: ".
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string scale = "desk";
    std::uint64_t base_seed = 2022;
    std::vector<int> budgets{1, 30};
    std::vector<int> num_sets{1, 4};
    std::vector<TerrainKind> terrains{TerrainKind::Flat, TerrainKind::Hills};
    int repetitions = 5;
    /// Per-budget generation counts; budgets not listed use base.generations.
    std::map<int, int> generations_by_budget;
    long threshold_fevals = 160;
    /// Template for every run: population sizes, learner, world, terrain shape.
    EvolutionConfig base;

    void validate() const;
};

struct MatrixCell {
    int index = 0;
    int budget = 1;
    int num_sets = 1;
    TerrainKind terrain = TerrainKind::Flat;

    /// e.g. "b30_k4_hills"
    std::string name() const;
};

/// Cells in budget-major, then num_sets, then terrain order.
std::vector<MatrixCell> experiment_cells(const ExperimentConfig& cfg);

EvolutionConfig run_config(const ExperimentConfig& cfg, const MatrixCell& cell, int repetition);

ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

std::filesystem::path run_log_path(const std::filesystem::path& out_dir, const MatrixCell& cell, int repetition);

/// Runs every (cell, repetition) not yet complete; returns how many were run.
int cmd_run(const std::filesystem::path& config_path, const std::filesystem::path& out_dir, int workers);
int run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, int workers);

struct SummaryReport {
    std::vector<std::filesystem::path> written;
    std::vector<std::string> problems; ///< missing cells/runs, thresholds not reached
};

SummaryReport cmd_summarize(const std::filesystem::path& out_dir, long threshold_fevals);

/// Writes line plots per terrain and axis plus one box plot; returns the files.
std::vector<std::filesystem::path> cmd_plot(const std::filesystem::path& out_dir);

/// Default worker count: MORPHEVO_WORKERS if set, else hardware concurrency.
int default_workers();

} // namespace morphevo
