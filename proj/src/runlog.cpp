#include "morphevo/runlog.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace morphevo {

double GenerationRecord::mean_fitness() const noexcept
{
    double sum = 0.0;
    int count = 0;
    for (const auto& [id, f] : population) {
        if (std::isfinite(f)) {
            sum += f;
            ++count;
        }
    }
    return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / count;
}

nlohmann::json fitness_to_json(double f)
{
    if (std::isfinite(f))
        return f;
    return nullptr;
}

double fitness_from_json(const nlohmann::json& j)
{
    return j.is_null() ? -std::numeric_limits<double>::infinity() : j.get<double>();
}

nlohmann::json to_json(const std::string& run_id, const EvalRecord& r, int num_sets)
{
    return {{"kind", "eval"},           {"run_id", run_id},           {"generation", r.generation},
            {"individual_id", r.individual_id}, {"eval_idx", r.eval_idx}, {"num_sets", num_sets},
            {"x", r.x},                 {"fitness", fitness_to_json(r.fitness)}, {"cum_fevals", r.cum_fevals}};
}

nlohmann::json to_json(const std::string& run_id, const IndividualRecord& r)
{
    return {{"kind", "individual"}, {"run_id", run_id},
            {"individual_id", r.id}, {"generation", r.generation},
            {"genotype", to_json(r.genotype)}, {"fitness", fitness_to_json(r.fitness)},
            {"best_x", r.best_x}};
}

nlohmann::json to_json(const std::string& run_id, const GenerationRecord& r)
{
    auto pop = nlohmann::json::array();
    for (const auto& [id, f] : r.population)
        pop.push_back({id, fitness_to_json(f)});
    return {{"kind", "generation"}, {"run_id", run_id}, {"generation", r.generation},
            {"population", std::move(pop)}, {"cum_fevals", r.cum_fevals}, {"morphologies", r.morphologies}};
}

CommittedPrefix read_committed(const std::filesystem::path& path)
{
    CommittedPrefix out;
    std::ifstream in(path);
    if (!in)
        return out;

    RunLog pending;
    std::vector<std::string> pending_lines;
    std::string line;
    while (std::getline(in, line)) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            break;
        }
        if (!j.is_object() || !j.contains("kind"))
            break;
        const auto kind = j["kind"].get<std::string>();
        pending_lines.push_back(line);
        if (kind == "meta") {
            pending.meta = j;
            pending.run_id = j.value("run_id", std::string{});
        } else if (kind == "eval") {
            EvalRecord r;
            r.generation = j.at("generation").get<int>();
            r.individual_id = j.at("individual_id").get<long>();
            r.eval_idx = j.at("eval_idx").get<int>();
            r.x = j.at("x").get<std::vector<double>>();
            r.fitness = fitness_from_json(j.at("fitness"));
            r.cum_fevals = j.at("cum_fevals").get<long>();
            pending.evals.push_back(std::move(r));
        } else if (kind == "individual") {
            IndividualRecord r;
            r.id = j.at("individual_id").get<long>();
            r.generation = j.at("generation").get<int>();
            r.genotype = genotype_from_json(j.at("genotype"));
            r.fitness = fitness_from_json(j.at("fitness"));
            r.best_x = j.at("best_x").get<std::vector<double>>();
            pending.individuals.push_back(std::move(r));
        } else if (kind == "generation") {
            GenerationRecord r;
            r.generation = j.at("generation").get<int>();
            for (const auto& p : j.at("population"))
                r.population.emplace_back(p.at(0).get<long>(), fitness_from_json(p.at(1)));
            r.cum_fevals = j.at("cum_fevals").get<long>();
            r.morphologies = j.at("morphologies").get<long>();
            pending.generations.push_back(std::move(r));
            // Commit point.
            out.log = pending;
            out.lines = pending_lines;
        } else {
            break;
        }
    }
    return out;
}

RunLog read_run_log(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path))
        throw std::runtime_error("run log not found: " + path.string());
    return read_committed(path).log;
}

RunLogWriter::RunLogWriter(const std::filesystem::path& path, const std::vector<std::string>& committed)
    : path_(path)
{
    std::string expected;
    for (const auto& l : committed)
        expected += l + '\n';

    std::string current;
    if (std::filesystem::exists(path)) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        current = ss.str();
    }
    if (current != expected) {
        const auto tmp = std::filesystem::path(path.string() + ".tmp");
        {
            std::ofstream t(tmp, std::ios::binary | std::ios::trunc);
            t << expected;
            if (!t.flush())
                throw std::runtime_error("cannot write run log: " + tmp.string());
        }
        std::filesystem::rename(tmp, path);
    }
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_)
        throw std::runtime_error("cannot open run log: " + path.string());
}

void RunLogWriter::append(const nlohmann::json& record)
{
    out_ << record.dump() << '\n';
    if (!out_)
        throw std::runtime_error("write failed: " + path_.string());
}

void RunLogWriter::flush()
{
    if (!out_.flush())
        throw std::runtime_error("flush failed: " + path_.string());
}

} // namespace morphevo
