#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphevo/controller.hpp"
#include "morphevo/learner.hpp"
#include "morphevo/morphology.hpp"
#include "morphevo/runlog.hpp"
#include "morphevo/simulator.hpp"
#include "morphevo/terrain.hpp"

namespace morphevo {

struct Individual {
    long id = 0;
    Genotype genotype;
    double fitness = 0.0;
    int birth_generation = 0;
    std::vector<double> best_x;
};

/// Fitness of one controller on one body; the default runs the planar simulator.
using Evaluator = std::function<double(const BodyGraph&, const ControllerParams&)>;

struct EvolutionConfig {
    int pop_size = 8;
    int offspring = 8;
    int tournament_k = 4;
    int generations = 20;
    int num_sets = 1;
    int min_modules = 5;
    int max_modules = 10;
    LearnConfig learn;
    TerrainSpec terrain;
    WorldConfig world;
    std::uint64_t seed = 1;
    std::string run_id = "run";

    /// Throws std::invalid_argument with the offending field named.
    void validate() const;
};

nlohmann::json to_json(const EvolutionConfig& cfg);

Evaluator simulator_evaluator(const TerrainSpec& terrain, const WorldConfig& world);

/// Index of the tournament winner in `pool`: k entrants drawn without
/// replacement (with replacement when k > |pool|); ties go to the lower id.
std::size_t tournament_select(std::span<const Individual> pool, int k, Rng& rng);

struct GenerationOutcome {
    std::vector<Individual> population;
    std::vector<Individual> offspring;
    std::vector<LearnResult> learning; ///< one per offspring, same order
};

/// Breeds lambda children, learns each, and selects mu survivors from parents
/// and children. Children get ids next_id, next_id + 1, ... and rng streams
/// derived from (seed, id), so results do not depend on `workers`.
GenerationOutcome next_generation(const std::vector<Individual>& pop, const EvolutionConfig& cfg, int generation,
                                  long next_id, Rng& rng, const Evaluator& evaluate, int workers = 1);

/// Learns a controller for `g` from scratch; fitness is the best seen.
LearnResult learn_individual(const Genotype& g, const EvolutionConfig& cfg, long id, const Evaluator& evaluate);

struct RunOptions {
    int workers = 1;
    /// Stop after committing this generation (simulates an interrupted run).
    int stop_after_generation = -1;
    Evaluator evaluator; ///< empty: planar simulator
    nlohmann::json extra_meta;
};

/// Runs (or resumes) one evolutionary run, appending to the log at `log_path`.
RunLog run_evolution(const EvolutionConfig& cfg, const std::filesystem::path& log_path, const RunOptions& opts = {});

} // namespace morphevo
