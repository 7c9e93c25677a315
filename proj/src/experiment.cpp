#include "morphevo/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "morphevo/parallel.hpp"
#include "morphevo/stats.hpp"
#include "morphevo/svg.hpp"

namespace morphevo {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kRunStream = 0x72756e;

// ---- config parsing -------------------------------------------------------

class ConfigReader {
public:
    ConfigReader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

    [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const
    {
        throw ConfigError(source_ + ":" + std::to_string(line_of(path)) + ": " + msg);
    }

    // 1-based line of the (nested) key, or 1 if not found.
    int line_of(const std::vector<std::string>& path) const
    {
        std::size_t pos = 0;
        for (const auto& key : path) {
            const auto found = text_.find("\"" + key + "\"", pos);
            if (found == std::string::npos)
                break;
            pos = found;
        }
        return line_at(pos);
    }

    int line_at(std::size_t byte) const
    {
        byte = std::min(byte, text_.size());
        return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
    }

    void check_keys(const nlohmann::json& obj, const std::vector<std::string>& path,
                    const std::set<std::string>& allowed) const
    {
        if (!obj.is_object())
            fail(path, "expected an object");
        for (const auto& [key, value] : obj.items()) {
            if (!allowed.count(key)) {
                auto p = path;
                p.push_back(key);
                fail(p, "unknown key '" + key + "'");
            }
        }
    }

    template <typename T>
    void read(const nlohmann::json& obj, const std::vector<std::string>& parent, const std::string& key, T& out) const
    {
        if (!obj.contains(key))
            return;
        auto path = parent;
        path.push_back(key);
        const auto& v = obj[key];
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number())
                    fail(path, "'" + key + "' must be a number");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer())
                    fail(path, "'" + key + "' must be an integer");
            }
            out = v.get<T>();
        } catch (const nlohmann::json::exception& e) {
            fail(path, "'" + key + "': " + e.what());
        }
    }

private:
    const std::string& text_;
    std::string source_;
};

std::string leading_word(const std::string& msg)
{
    auto end = msg.find_first_of(" :");
    return msg.substr(0, end);
}

// ---- CSV helpers ----------------------------------------------------------

std::string fmt(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v < 0 ? "-inf" : "inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_number(const std::string& s)
{
    if (s == "nan")
        return std::nan("");
    if (s == "-inf")
        return -INFINITY;
    if (s == "inf")
        return INFINITY;
    return std::stod(s);
}

void write_text(const fs::path& path, const std::string& text)
{
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out.flush())
        throw std::runtime_error("cannot write " + path.string());
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("missing file: " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ','))
            cols.push_back(col);
        rows.push_back(std::move(cols));
    }
    return rows;
}

std::string curve_csv(const std::vector<CurvePoint>& curve)
{
    std::string out = "x,mean,std\n";
    for (const auto& p : curve)
        out += fmt(p.x) + "," + fmt(p.mean) + "," + fmt(p.std) + "\n";
    return out;
}

std::vector<double> union_grid(const std::vector<RunLog>& logs, Axis axis)
{
    std::set<double> xs;
    for (const auto& l : logs)
        for (double x : generation_boundaries(l, axis))
            xs.insert(x);
    return {xs.begin(), xs.end()};
}

int generations_for(const ExperimentConfig& cfg, int budget)
{
    const auto it = cfg.generations_by_budget.find(budget);
    return it == cfg.generations_by_budget.end() ? cfg.base.generations : it->second;
}

bool run_complete(const fs::path& path, int generations)
{
    const auto prefix = read_committed(path);
    return !prefix.log.generations.empty() && prefix.log.generations.back().generation == generations;
}

std::string pooled_name(TerrainKind t, int budget, Axis axis)
{
    return "curve_pooled_" + to_string(t) + "_b" + std::to_string(budget) + "_" + to_string(axis) + ".csv";
}

} // namespace

// ---- ExperimentConfig -------------------------------------------------------

void ExperimentConfig::validate() const
{
    if (budgets.empty() || num_sets.empty() || terrains.empty())
        throw std::invalid_argument("budgets, num_sets and terrains must be non-empty");
    if (repetitions < 1)
        throw std::invalid_argument("repetitions must be >= 1");
    if (threshold_fevals < 0)
        throw std::invalid_argument("threshold_fevals must be >= 0");
    for (const auto& [b, g] : generations_by_budget)
        if (g < 0)
            throw std::invalid_argument("generations_by_budget entries must be >= 0");
    for (const auto& cell : experiment_cells(*this))
        run_config(*this, cell, 0).validate();
}

std::string MatrixCell::name() const
{
    return "b" + std::to_string(budget) + "_k" + std::to_string(num_sets) + "_" + to_string(terrain);
}

std::vector<MatrixCell> experiment_cells(const ExperimentConfig& cfg)
{
    std::vector<MatrixCell> out;
    for (int b : cfg.budgets)
        for (int k : cfg.num_sets)
            for (auto t : cfg.terrains)
                out.push_back({static_cast<int>(out.size()), b, k, t});
    return out;
}

EvolutionConfig run_config(const ExperimentConfig& cfg, const MatrixCell& cell, int repetition)
{
    EvolutionConfig rc = cfg.base;
    rc.learn.budget = cell.budget;
    rc.num_sets = cell.num_sets;
    rc.terrain.kind = cell.terrain;
    rc.generations = generations_for(cfg, cell.budget);
    rc.seed = hash_seed({cfg.base_seed, kRunStream, static_cast<std::uint64_t>(cell.index),
                         static_cast<std::uint64_t>(repetition)});
    rc.run_id = cell.name() + "_r" + std::to_string(repetition);
    return rc;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source)
{
    ConfigReader r(text, source);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(source + ":" + std::to_string(r.line_at(e.byte == 0 ? 0 : e.byte - 1)) + ": " + e.what());
    }

    r.check_keys(j, {},
                 {"scale", "base_seed", "budgets", "num_sets", "terrains", "repetitions", "pop_size", "offspring",
                  "tournament_k", "generations", "generations_by_budget", "min_modules", "max_modules",
                  "threshold_fevals", "learn", "world", "terrain"});

    ExperimentConfig c;
    r.read(j, {}, "scale", c.scale);
    if (c.scale != "desk" && c.scale != "full")
        r.fail({"scale"}, "scale must be 'desk' or 'full'");
    r.read(j, {}, "base_seed", c.base_seed);
    r.read(j, {}, "budgets", c.budgets);
    r.read(j, {}, "num_sets", c.num_sets);
    if (j.contains("terrains")) {
        std::vector<std::string> names;
        r.read(j, {}, "terrains", names);
        c.terrains.clear();
        for (const auto& n : names) {
            try {
                c.terrains.push_back(terrain_kind_from_string(n));
            } catch (const std::invalid_argument& e) {
                r.fail({"terrains"}, e.what());
            }
        }
    }
    r.read(j, {}, "repetitions", c.repetitions);
    r.read(j, {}, "threshold_fevals", c.threshold_fevals);

    auto& b = c.base;
    r.read(j, {}, "pop_size", b.pop_size);
    r.read(j, {}, "offspring", b.offspring);
    r.read(j, {}, "tournament_k", b.tournament_k);
    r.read(j, {}, "generations", b.generations);
    r.read(j, {}, "min_modules", b.min_modules);
    r.read(j, {}, "max_modules", b.max_modules);

    if (j.contains("generations_by_budget")) {
        const auto& g = j["generations_by_budget"];
        if (!g.is_object())
            r.fail({"generations_by_budget"}, "expected an object mapping budget to generations");
        for (const auto& [key, value] : g.items()) {
            int budget = 0;
            try {
                budget = std::stoi(key);
            } catch (const std::exception&) {
                r.fail({"generations_by_budget", key}, "budget key '" + key + "' is not an integer");
            }
            if (!value.is_number_integer())
                r.fail({"generations_by_budget", key}, "generation count must be an integer");
            c.generations_by_budget[budget] = value.get<int>();
        }
    }

    if (j.contains("learn")) {
        const auto& l = j["learn"];
        r.check_keys(l, {"learn"},
                     {"init_fraction", "beta", "n_candidates", "length_scale", "signal_variance", "noise_variance"});
        r.read(l, {"learn"}, "init_fraction", b.learn.init_fraction);
        r.read(l, {"learn"}, "beta", b.learn.beta);
        r.read(l, {"learn"}, "n_candidates", b.learn.n_candidates);
        r.read(l, {"learn"}, "length_scale", b.learn.gp.length_scale);
        r.read(l, {"learn"}, "signal_variance", b.learn.gp.signal_variance);
        r.read(l, {"learn"}, "noise_variance", b.learn.gp.noise_variance);
    }
    if (j.contains("terrain")) {
        const auto& t = j["terrain"];
        r.check_keys(t, {"terrain"}, {"hill_spacing", "hill_height", "hill_width"});
        r.read(t, {"terrain"}, "hill_spacing", b.terrain.hill_spacing);
        r.read(t, {"terrain"}, "hill_height", b.terrain.hill_height);
        r.read(t, {"terrain"}, "hill_width", b.terrain.hill_width);
    }
    if (j.contains("world")) {
        const auto& w = j["world"];
        r.check_keys(w, {"world"},
                     {"gravity", "dt", "control_dt", "duration", "settle_time", "friction_coeff", "module_size",
                      "module_mass", "servo_kp", "servo_kd", "torque_limit", "contact_stiffness", "contact_damping",
                      "spawn_clearance", "solver_iterations"});
        auto& wc = b.world;
        const std::vector<std::string> p{"world"};
        r.read(w, p, "gravity", wc.gravity);
        r.read(w, p, "dt", wc.dt);
        r.read(w, p, "control_dt", wc.control_dt);
        r.read(w, p, "duration", wc.duration);
        r.read(w, p, "settle_time", wc.settle_time);
        r.read(w, p, "friction_coeff", wc.friction_coeff);
        r.read(w, p, "module_size", wc.module_size);
        r.read(w, p, "module_mass", wc.module_mass);
        r.read(w, p, "servo_kp", wc.servo_kp);
        r.read(w, p, "servo_kd", wc.servo_kd);
        r.read(w, p, "torque_limit", wc.torque_limit);
        r.read(w, p, "contact_stiffness", wc.contact_stiffness);
        r.read(w, p, "contact_damping", wc.contact_damping);
        r.read(w, p, "spawn_clearance", wc.spawn_clearance);
        r.read(w, p, "solver_iterations", wc.solver_iterations);
    }

    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        std::string key = leading_word(msg);
        // Messages from nested validators carry a "world config:" / "learn:" prefix.
        if (key == "world")
            key = leading_word(msg.substr(msg.find(':') + 2));
        r.fail({key}, msg);
    }
    return c;
}

ExperimentConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path.string() + ":1: cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

nlohmann::json to_json(const ExperimentConfig& cfg)
{
    auto base = to_json(cfg.base);
    nlohmann::json j = {
        {"scale", cfg.scale},
        {"base_seed", cfg.base_seed},
        {"budgets", cfg.budgets},
        {"num_sets", cfg.num_sets},
        {"repetitions", cfg.repetitions},
        {"threshold_fevals", cfg.threshold_fevals},
        {"pop_size", base["pop_size"]},
        {"offspring", base["offspring"]},
        {"tournament_k", base["tournament_k"]},
        {"generations", base["generations"]},
        {"min_modules", base["min_modules"]},
        {"max_modules", base["max_modules"]},
        {"learn", base["learn"]},
        {"world", base["world"]},
    };
    j["learn"].erase("budget");
    auto terrains = nlohmann::json::array();
    for (auto t : cfg.terrains)
        terrains.push_back(to_string(t));
    j["terrains"] = terrains;
    auto gbb = nlohmann::json::object();
    for (const auto& [budget, g] : cfg.generations_by_budget)
        gbb[std::to_string(budget)] = g;
    j["generations_by_budget"] = gbb;
    auto terrain = base["terrain"];
    terrain.erase("kind");
    j["terrain"] = terrain;
    return j;
}

fs::path run_log_path(const fs::path& out_dir, const MatrixCell& cell, int repetition)
{
    return out_dir / "runs" / cell.name() / ("rep" + std::to_string(repetition) + ".jsonl");
}

int default_workers()
{
    if (const char* env = std::getenv("MORPHEVO_WORKERS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1)
                return n;
        } catch (const std::exception&) {
        }
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// ---- run -------------------------------------------------------------------

int run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir, int workers)
{
    cfg.validate();
    fs::create_directories(out_dir / "runs");

    const auto resolved = to_json(cfg).dump(2) + "\n";
    const auto cfg_path = out_dir / "config.json";
    if (fs::exists(cfg_path)) {
        std::ifstream in(cfg_path);
        std::stringstream ss;
        ss << in.rdbuf();
        if (ss.str() != resolved)
            throw std::runtime_error(out_dir.string() + " holds results of a different configuration");
    } else {
        write_text(cfg_path, resolved);
    }

    struct Task {
        MatrixCell cell;
        int rep;
    };
    std::vector<Task> todo;
    for (const auto& cell : experiment_cells(cfg)) {
        fs::create_directories(run_log_path(out_dir, cell, 0).parent_path());
        for (int rep = 0; rep < cfg.repetitions; ++rep)
            if (!run_complete(run_log_path(out_dir, cell, rep), generations_for(cfg, cell.budget)))
                todo.push_back({cell, rep});
    }

    parallel_for(todo.size(), workers, [&](std::size_t i) {
        const auto& t = todo[i];
        RunOptions opts;
        opts.extra_meta = {{"cell", t.cell.name()}, {"repetition", t.rep}};
        run_evolution(run_config(cfg, t.cell, t.rep), run_log_path(out_dir, t.cell, t.rep), opts);
    });
    return static_cast<int>(todo.size());
}

int cmd_run(const fs::path& config_path, const fs::path& out_dir, int workers)
{
    return run_experiment(load_config(config_path), out_dir, workers);
}

// ---- summarize ---------------------------------------------------------------

SummaryReport cmd_summarize(const fs::path& out_dir, long threshold_fevals)
{
    const auto cfg = load_config(out_dir / "config.json");
    const auto summary = out_dir / "summary";
    fs::create_directories(summary);
    SummaryReport report;

    auto emit = [&](const fs::path& p, const std::string& text) {
        write_text(p, text);
        report.written.push_back(p);
    };

    std::map<int, std::vector<RunLog>> cell_logs;
    const auto cells = experiment_cells(cfg);
    for (const auto& cell : cells) {
        for (int rep = 0; rep < cfg.repetitions; ++rep) {
            const auto path = run_log_path(out_dir, cell, rep);
            if (!run_complete(path, generations_for(cfg, cell.budget))) {
                report.problems.push_back("missing or incomplete run: " + cell.name() + " rep " + std::to_string(rep));
                continue;
            }
            cell_logs[cell.index].push_back(read_run_log(path));
        }
        const auto& logs = cell_logs[cell.index];
        if (logs.empty()) {
            report.problems.push_back("missing cell: " + cell.name());
            continue;
        }
        for (auto axis : {Axis::Morphologies, Axis::Fevals})
            emit(summary / ("curve_" + cell.name() + "_" + to_string(axis) + ".csv"),
                 curve_csv(mean_fitness_curve(logs, axis, union_grid(logs, axis))));
    }

    // Pooled over controller-set counts, one curve per (terrain, budget).
    std::string final_csv = "terrain,budget,final_mean,ratio_to_budget_" + std::to_string(cfg.budgets.front()) + "\n";
    for (auto terrain : cfg.terrains) {
        double reference = std::nan("");
        for (int budget : cfg.budgets) {
            std::vector<RunLog> pooled;
            for (const auto& cell : cells)
                if (cell.terrain == terrain && cell.budget == budget)
                    pooled.insert(pooled.end(), cell_logs[cell.index].begin(), cell_logs[cell.index].end());
            if (pooled.empty())
                continue;
            for (auto axis : {Axis::Morphologies, Axis::Fevals})
                emit(summary / pooled_name(terrain, budget, axis),
                     curve_csv(mean_fitness_curve(pooled, axis, union_grid(pooled, axis))));
            double sum = 0.0;
            int n = 0;
            for (const auto& l : pooled) {
                const double m = l.generations.back().mean_fitness();
                if (!std::isnan(m)) {
                    sum += m;
                    ++n;
                }
            }
            const double final_mean = n ? sum / n : std::nan("");
            if (budget == cfg.budgets.front())
                reference = final_mean;
            final_csv += to_string(terrain) + "," + std::to_string(budget) + "," + fmt(final_mean) + "," +
                         fmt(final_mean / reference) + "\n";
        }
    }
    emit(summary / "final.csv", final_csv);

    std::map<int, std::vector<double>> at_threshold;
    std::string threshold_csv = "cell,budget,num_sets,terrain,run,fitness\n";
    for (const auto& cell : cells) {
        for (const auto& log : cell_logs[cell.index]) {
            try {
                const double f = fitness_at_threshold(log, threshold_fevals);
                at_threshold[cell.index].push_back(f);
                threshold_csv += cell.name() + "," + std::to_string(cell.budget) + "," +
                                 std::to_string(cell.num_sets) + "," + to_string(cell.terrain) + "," + log.run_id +
                                 "," + fmt(f) + "\n";
            } catch (const std::out_of_range& e) {
                report.problems.push_back(e.what());
            }
        }
    }
    emit(summary / "threshold.csv", threshold_csv);

    std::string tests_csv = "cell_a,cell_b,U,p,method\n";
    for (auto terrain : cfg.terrains)
        for (int k : cfg.num_sets)
            for (std::size_t i = 0; i < cfg.budgets.size(); ++i)
                for (std::size_t j = i + 1; j < cfg.budgets.size(); ++j) {
                    const MatrixCell* a = nullptr;
                    const MatrixCell* b = nullptr;
                    for (const auto& c : cells) {
                        if (c.terrain != terrain || c.num_sets != k)
                            continue;
                        if (c.budget == cfg.budgets[i])
                            a = &c;
                        if (c.budget == cfg.budgets[j])
                            b = &c;
                    }
                    auto finite = [&](const MatrixCell* c) {
                        std::vector<double> v;
                        for (double f : at_threshold[c->index])
                            if (!std::isnan(f))
                                v.push_back(f);
                        return v;
                    };
                    const auto va = finite(a);
                    const auto vb = finite(b);
                    if (va.empty() || vb.empty()) {
                        report.problems.push_back("no threshold values for " + a->name() + " vs " + b->name());
                        continue;
                    }
                    const auto t = wilcoxon_rank_sum(va, vb);
                    tests_csv += a->name() + "," + b->name() + "," + fmt(t.statistic) + "," + fmt(t.p_two_sided) +
                                 "," + to_string(t.method) + "\n";
                }
    emit(summary / "tests.csv", tests_csv);
    return report;
}

// ---- plot --------------------------------------------------------------------

std::vector<fs::path> cmd_plot(const fs::path& out_dir)
{
    const auto cfg = load_config(out_dir / "config.json");
    const auto summary = out_dir / "summary";
    const auto plots = out_dir / "plots";
    std::vector<fs::path> written;

    for (auto terrain : cfg.terrains) {
        for (auto axis : {Axis::Morphologies, Axis::Fevals}) {
            svg::LineChart chart;
            chart.title = "Mean population fitness, " + to_string(terrain) + " terrain";
            chart.x_label = axis == Axis::Morphologies ? "morphologies evaluated" : "function evaluations";
            chart.y_label = "fitness (m)";
            for (int budget : cfg.budgets) {
                svg::Series s;
                s.label = "budget " + std::to_string(budget);
                for (const auto& row : read_csv(summary / pooled_name(terrain, budget, axis))) {
                    s.x.push_back(parse_number(row.at(0)));
                    s.mean.push_back(parse_number(row.at(1)));
                    s.std.push_back(parse_number(row.at(2)));
                }
                chart.series.push_back(std::move(s));
            }
            const auto path = plots / ("line_" + to_string(terrain) + "_" + to_string(axis) + ".svg");
            write_text(path, svg::render(chart));
            written.push_back(path);
        }
    }

    const auto rows = read_csv(summary / "threshold.csv");
    svg::BoxChart box;
    box.title = "Mean generation fitness at the evaluation threshold";
    box.y_label = "fitness (m)";
    for (auto terrain : cfg.terrains)
        for (int budget : cfg.budgets) {
            svg::BoxGroup g;
            g.label = to_string(terrain) + " b" + std::to_string(budget);
            for (const auto& row : rows)
                if (row.at(3) == to_string(terrain) && std::stoi(row.at(1)) == budget) {
                    const double v = parse_number(row.at(5));
                    if (std::isfinite(v))
                        g.values.push_back(v);
                }
            if (!g.values.empty())
                box.groups.push_back(std::move(g));
        }
    const auto path = plots / "boxplot.svg";
    write_text(path, svg::render(box));
    written.push_back(path);
    return written;
}

} // namespace morphevo
