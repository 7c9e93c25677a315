#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "morphevo/morphology.hpp"

namespace morphevo {

// Run logs are JSON lines. A generation is committed by its trailing
// "generation" record; anything after the last commit is discarded on resume.

struct EvalRecord {
    int generation = 0;
    long individual_id = 0;
    int eval_idx = 0;
    std::vector<double> x;
    double fitness = 0.0;
    long cum_fevals = 0;
};

struct IndividualRecord {
    long id = 0;
    int generation = 0;
    Genotype genotype;
    double fitness = 0.0;
    std::vector<double> best_x;
};

struct GenerationRecord {
    int generation = 0;
    std::vector<std::pair<long, double>> population; ///< (id, fitness)
    long cum_fevals = 0;
    long morphologies = 0;

    /// Mean over non-diverged members; NaN if every member diverged.
    double mean_fitness() const noexcept;
};

struct RunLog {
    std::string run_id;
    nlohmann::json meta;
    std::vector<EvalRecord> evals;
    std::vector<IndividualRecord> individuals;
    std::vector<GenerationRecord> generations;

    long total_fevals() const noexcept { return generations.empty() ? 0 : generations.back().cum_fevals; }
};

/// -inf is written as null.
nlohmann::json fitness_to_json(double f);
double fitness_from_json(const nlohmann::json& j);

nlohmann::json to_json(const std::string& run_id, const EvalRecord& r, int num_sets);
nlohmann::json to_json(const std::string& run_id, const IndividualRecord& r);
nlohmann::json to_json(const std::string& run_id, const GenerationRecord& r);

struct CommittedPrefix {
    RunLog log;
    std::vector<std::string> lines; ///< raw committed lines, meta included
};

/// Parses the committed part of a log. Missing file gives an empty log.
CommittedPrefix read_committed(const std::filesystem::path& path);

RunLog read_run_log(const std::filesystem::path& path);

/// Append-only line writer; throws std::runtime_error on any I/O failure.
class RunLogWriter {
public:
    /// Rewrites `path` to exactly `committed` lines and opens it for appending.
    RunLogWriter(const std::filesystem::path& path, const std::vector<std::string>& committed);

    void append(const nlohmann::json& record);
    void flush();

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

} // namespace morphevo
