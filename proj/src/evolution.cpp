#include "morphevo/evolution.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "morphevo/parallel.hpp"
#include "morphevo/simd/kernels.hpp"

namespace morphevo {

namespace {

// Stream tags for hash_seed.
constexpr std::uint64_t kGenerationStream = 0x67656e;
constexpr std::uint64_t kChildStream = 0x6b6964;

LearnConfig learn_config_for(const EvolutionConfig& cfg)
{
    LearnConfig lc = cfg.learn;
    lc.dim = kParamsPerSet * cfg.num_sets;
    return lc;
}

struct Tally {
    long cum_fevals = 0;
};

// Writes one individual's evaluations followed by its summary record.
void log_individual(RunLogWriter& w, const EvolutionConfig& cfg, const Individual& ind, const LearnResult& lr,
                    Tally& tally)
{
    for (std::size_t e = 0; e < lr.history.size(); ++e) {
        EvalRecord r;
        r.generation = ind.birth_generation;
        r.individual_id = ind.id;
        r.eval_idx = static_cast<int>(e);
        r.x = lr.history[e].x;
        r.fitness = lr.history[e].fitness;
        r.cum_fevals = ++tally.cum_fevals;
        w.append(to_json(cfg.run_id, r, cfg.num_sets));
    }
    w.append(to_json(cfg.run_id, IndividualRecord{ind.id, ind.birth_generation, ind.genotype, ind.fitness, ind.best_x}));
}

void log_generation(RunLogWriter& w, const EvolutionConfig& cfg, int generation,
                    const std::vector<Individual>& pop, const Tally& tally)
{
    GenerationRecord r;
    r.generation = generation;
    for (const auto& ind : pop)
        r.population.emplace_back(ind.id, ind.fitness);
    r.cum_fevals = tally.cum_fevals;
    r.morphologies = cfg.pop_size + static_cast<long>(generation) * cfg.offspring;
    w.append(to_json(cfg.run_id, r));
    w.flush();
}

std::vector<LearnResult> learn_all(const std::vector<Genotype>& genotypes, long first_id, const EvolutionConfig& cfg,
                                   const Evaluator& evaluate, int workers)
{
    std::vector<LearnResult> out(genotypes.size());
    parallel_for(genotypes.size(), workers, [&](std::size_t i) {
        out[i] = learn_individual(genotypes[i], cfg, first_id + static_cast<long>(i), evaluate);
    });
    return out;
}

} // namespace

void EvolutionConfig::validate() const
{
    if (pop_size < 2)
        throw std::invalid_argument("pop_size must be >= 2");
    if (offspring < 2 || offspring % 2 != 0)
        throw std::invalid_argument("offspring must be even and >= 2");
    if (tournament_k < 2 || tournament_k > pop_size + offspring)
        throw std::invalid_argument("tournament_k must lie in [2, pop_size + offspring]");
    if (generations < 0)
        throw std::invalid_argument("generations must be >= 0");
    if (num_sets < 1)
        throw std::invalid_argument("num_sets must be >= 1");
    if (min_modules < 1 || max_modules < min_modules)
        throw std::invalid_argument("need 1 <= min_modules <= max_modules");
    learn_config_for(*this).validate();
    world.validate();
    if (terrain.kind == TerrainKind::Hills && !(terrain.hill_width > 0.0 && terrain.hill_width <= terrain.hill_spacing))
        throw std::invalid_argument("hill_width must lie in (0, hill_spacing]");
}

nlohmann::json to_json(const EvolutionConfig& cfg)
{
    const auto& w = cfg.world;
    const auto& l = cfg.learn;
    return {
        {"pop_size", cfg.pop_size},
        {"offspring", cfg.offspring},
        {"tournament_k", cfg.tournament_k},
        {"generations", cfg.generations},
        {"num_sets", cfg.num_sets},
        {"min_modules", cfg.min_modules},
        {"max_modules", cfg.max_modules},
        {"seed", cfg.seed},
        {"learn",
         {{"budget", l.budget},
          {"init_fraction", l.init_fraction},
          {"beta", l.beta},
          {"n_candidates", l.n_candidates},
          {"length_scale", l.gp.length_scale},
          {"signal_variance", l.gp.signal_variance},
          {"noise_variance", l.gp.noise_variance}}},
        {"terrain",
         {{"kind", to_string(cfg.terrain.kind)},
          {"hill_spacing", cfg.terrain.hill_spacing},
          {"hill_height", cfg.terrain.hill_height},
          {"hill_width", cfg.terrain.hill_width}}},
        {"world",
         {{"gravity", w.gravity},
          {"dt", w.dt},
          {"control_dt", w.control_dt},
          {"duration", w.duration},
          {"settle_time", w.settle_time},
          {"friction_coeff", w.friction_coeff},
          {"module_size", w.module_size},
          {"module_mass", w.module_mass},
          {"servo_kp", w.servo_kp},
          {"servo_kd", w.servo_kd},
          {"torque_limit", w.torque_limit},
          {"contact_stiffness", w.contact_stiffness},
          {"contact_damping", w.contact_damping},
          {"spawn_clearance", w.spawn_clearance},
          {"solver_iterations", w.solver_iterations}}},
    };
}

Evaluator simulator_evaluator(const TerrainSpec& terrain, const WorldConfig& world)
{
    return [terrain, world](const BodyGraph& body, const ControllerParams& params) {
        return simulate(body, params, terrain, world).fitness;
    };
}

std::size_t tournament_select(std::span<const Individual> pool, int k, Rng& rng)
{
    if (pool.empty())
        throw std::invalid_argument("tournament_select: empty pool");
    if (k < 1)
        throw std::invalid_argument("tournament_select: k must be >= 1");
    const int n = static_cast<int>(pool.size());

    std::vector<std::size_t> entrants;
    if (k <= n) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        for (int i = 0; i < k; ++i)
            std::swap(idx[i], idx[uniform_int(rng, i, n - 1)]);
        entrants.assign(idx.begin(), idx.begin() + k);
    } else {
        for (int i = 0; i < k; ++i)
            entrants.push_back(static_cast<std::size_t>(uniform_int(rng, 0, n - 1)));
    }

    std::size_t best = entrants.front();
    for (auto e : entrants) {
        const auto& c = pool[e];
        const auto& b = pool[best];
        if (c.fitness > b.fitness || (c.fitness == b.fitness && c.id < b.id))
            best = e;
    }
    return best;
}

LearnResult learn_individual(const Genotype& g, const EvolutionConfig& cfg, long id, const Evaluator& evaluate)
{
    const BodyGraph body = develop(g);
    const LearnConfig lc = learn_config_for(cfg);
    Rng rng = make_rng({cfg.seed, kChildStream, static_cast<std::uint64_t>(id)});
    return learn([&](std::span<const double> x) { return evaluate(body, vector_to_params(x, cfg.num_sets)); }, lc,
                 rng);
}

GenerationOutcome next_generation(const std::vector<Individual>& pop, const EvolutionConfig& cfg, int generation,
                                  long next_id, Rng& rng, const Evaluator& evaluate, int workers)
{
    std::vector<Genotype> kids;
    kids.reserve(cfg.offspring);
    for (int p = 0; p < cfg.offspring / 2; ++p) {
        const auto& a = pop[tournament_select(pop, cfg.tournament_k, rng)];
        const auto& b = pop[tournament_select(pop, cfg.tournament_k, rng)];
        auto [c1, c2] = crossover(a.genotype, b.genotype, rng);
        kids.push_back(mutate(c1, rng, cfg.num_sets));
        kids.push_back(mutate(c2, rng, cfg.num_sets));
    }

    GenerationOutcome out;
    out.learning = learn_all(kids, next_id, cfg, evaluate, workers);
    for (std::size_t i = 0; i < kids.size(); ++i) {
        const auto& lr = out.learning[i];
        out.offspring.push_back({next_id + static_cast<long>(i), kids[i], lr.best_fitness, generation, lr.best_x});
    }

    std::vector<Individual> pool = pop;
    pool.insert(pool.end(), out.offspring.begin(), out.offspring.end());
    for (int s = 0; s < cfg.pop_size; ++s) {
        // Capped at the shrinking pool so a full tournament stays full (elitist).
        const int k = std::min(cfg.tournament_k, static_cast<int>(pool.size()));
        const auto w = tournament_select(pool, k, rng);
        out.population.push_back(std::move(pool[w]));
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(w));
    }
    return out;
}

RunLog run_evolution(const EvolutionConfig& cfg, const std::filesystem::path& log_path, const RunOptions& opts)
{
    cfg.validate();
    const Evaluator evaluate = opts.evaluator ? opts.evaluator : simulator_evaluator(cfg.terrain, cfg.world);
    const auto cfg_json = to_json(cfg);

    auto prefix = read_committed(log_path);
    if (!prefix.log.generations.empty() && prefix.log.meta.value("config", nlohmann::json{}) != cfg_json)
        throw std::runtime_error("run log " + log_path.string() + " was written with a different configuration");
    if (prefix.log.generations.empty())
        prefix.lines.clear();

    RunLogWriter writer(log_path, prefix.lines);
    std::vector<Individual> pop;
    Tally tally;
    long next_id = 0;
    int generation = 0;

    if (prefix.log.generations.empty()) {
        nlohmann::json meta = {{"kind", "meta"},
                               {"run_id", cfg.run_id},
                               {"seed", cfg.seed},
                               {"config", cfg_json},
                               {"build", {{"format", 1}, {"simd", simd::to_string(simd::active_kernels().isa)}}}};
        if (!opts.extra_meta.is_null())
            meta["extra"] = opts.extra_meta;
        writer.append(meta);

        Rng rng = make_rng({cfg.seed, kGenerationStream, 0});
        std::vector<Genotype> genotypes;
        for (int i = 0; i < cfg.pop_size; ++i)
            genotypes.push_back(random_genotype(rng, cfg.min_modules, cfg.max_modules, cfg.num_sets));
        const auto learned = learn_all(genotypes, 0, cfg, evaluate, opts.workers);
        for (int i = 0; i < cfg.pop_size; ++i) {
            pop.push_back({i, genotypes[i], learned[i].best_fitness, 0, learned[i].best_x});
            log_individual(writer, cfg, pop.back(), learned[i], tally);
        }
        next_id = cfg.pop_size;
        log_generation(writer, cfg, 0, pop, tally);
    } else {
        const auto& log = prefix.log;
        const auto& last = log.generations.back();
        for (const auto& [id, f] : last.population) {
            const auto it = std::find_if(log.individuals.begin(), log.individuals.end(),
                                         [id = id](const IndividualRecord& r) { return r.id == id; });
            if (it == log.individuals.end())
                throw std::runtime_error("run log is missing individual " + std::to_string(id));
            pop.push_back({it->id, it->genotype, it->fitness, it->generation, it->best_x});
        }
        for (const auto& r : log.individuals)
            next_id = std::max(next_id, r.id + 1);
        tally.cum_fevals = last.cum_fevals;
        generation = last.generation;
    }

    while (generation < cfg.generations && generation != opts.stop_after_generation) {
        ++generation;
        Rng rng = make_rng({cfg.seed, kGenerationStream, static_cast<std::uint64_t>(generation)});
        auto outcome = next_generation(pop, cfg, generation, next_id, rng, evaluate, opts.workers);
        for (std::size_t i = 0; i < outcome.offspring.size(); ++i)
            log_individual(writer, cfg, outcome.offspring[i], outcome.learning[i], tally);
        next_id += static_cast<long>(outcome.offspring.size());
        pop = std::move(outcome.population);
        log_generation(writer, cfg, generation, pop, tally);
    }
    return read_run_log(log_path);
}

} // namespace morphevo
