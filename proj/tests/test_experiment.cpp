#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "morphevo/experiment.hpp"
#include "morphevo/svg.hpp"
#include "oracles.hpp"

using namespace morphevo;
namespace fs = std::filesystem;

namespace {

const char* kTiny = R"({
  "budgets": [1, 4],
  "num_sets": [1],
  "terrains": ["flat", "hills"],
  "repetitions": 2,
  "pop_size": 2,
  "offspring": 2,
  "tournament_k": 2,
  "generations": 2,
  "generations_by_budget": {"1": 6},
  "threshold_fevals": 8,
  "learn": {"n_candidates": 16},
  "world": {"duration": 1.0, "settle_time": 0.5}
})";

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path temp_dir(const std::string& name)
{
    const auto d = fs::temp_directory_path() / ("morphevo_exp_" + name);
    fs::remove_all(d);
    return d;
}

std::string error_of(const std::string& text)
{
    try {
        parse_config(text, "cfg.json");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("config defaults and overrides")
{
    const auto d = parse_config("{}");
    CHECK(d.budgets == std::vector<int>{1, 30});
    CHECK(d.repetitions == 5);
    CHECK(experiment_cells(d).size() == 8);

    const auto c = parse_config(kTiny);
    CHECK(c.base.world.duration == 1.0);
    CHECK(c.base.learn.n_candidates == 16);
    const auto cells = experiment_cells(c);
    REQUIRE(cells.size() == 4);
    CHECK(cells[0].name() == "b1_k1_flat");
    CHECK(cells[3].name() == "b4_k1_hills");
    CHECK(run_config(c, cells[0], 0).generations == 6);
    CHECK(run_config(c, cells[2], 0).generations == 2);
    CHECK(run_config(c, cells[2], 1).learn.budget == 4);
    CHECK(run_config(c, cells[0], 0).seed != run_config(c, cells[0], 1).seed);

    // Resolved form parses back to the same thing.
    CHECK(to_json(parse_config(to_json(c).dump(2))) == to_json(c));
}

TEST_CASE("config errors point at the offending line")
{
    CHECK(error_of("{\n  \"budgets\": [1],\n  \"colour\": 3\n}") == "cfg.json:3: unknown key 'colour'");
    CHECK(error_of("{\n  \"world\": {\n    \"dt\": \"fast\"\n  }\n}").rfind("cfg.json:3: 'dt' must be a number", 0) == 0);
    CHECK(error_of("{\n  \"world\": {\n    \"dt\": -1\n  }\n}").rfind("cfg.json:3:", 0) == 0);
    CHECK(error_of("{\n\n  \"offspring\": 3\n}").rfind("cfg.json:3:", 0) == 0);
    CHECK(error_of("{\n  \"terrains\": [\"moon\"]\n}").rfind("cfg.json:2:", 0) == 0);
    CHECK(error_of("{\n  \"budgets\": [1,\n}").rfind("cfg.json:3:", 0) == 0);
    CHECK(error_of("{\n  \"scale\": \"huge\"\n}").rfind("cfg.json:2:", 0) == 0);
}

TEST_CASE("committed configs are valid")
{
    const fs::path root = fs::path(__FILE__).parent_path().parent_path() / "configs";
    const auto desk = load_config(root / "desk.json");
    CHECK(desk.base.pop_size == 8);
    CHECK(desk.base.offspring == 8);
    CHECK(desk.base.generations == 20);
    CHECK(desk.base.world.duration == 10.0);
    CHECK(desk.repetitions == 5);
    const auto full = load_config(root / "full.json");
    CHECK(full.base.pop_size == 50);
    CHECK(full.generations_by_budget.at(1) == 9995);
    CHECK(full.base.generations == 495);
    CHECK(full.threshold_fevals == 100000);
    CHECK(experiment_cells(full).size() == 18);
}

TEST_CASE("run, summarize and plot end to end")
{
    const auto out = temp_dir("e2e");
    const auto cfg = parse_config(kTiny);
    CHECK(run_experiment(cfg, out, 2) == 8);
    CHECK(run_experiment(cfg, out, 1) == 0); // already complete

    auto other = cfg;
    other.repetitions = 3;
    CHECK_THROWS(run_experiment(other, out, 1));

    const auto report = cmd_summarize(out, cfg.threshold_fevals);
    CHECK(report.problems.empty());
    int curves = 0;
    for (const auto& p : report.written)
        curves += p.filename().string().rfind("curve_b", 0) == 0;
    CHECK(curves == 4 * 2);
    CHECK(fs::exists(out / "summary" / "threshold.csv"));
    CHECK(fs::exists(out / "summary" / "tests.csv"));

    // The test table reproduces from the threshold table.
    const auto tests = slurp(out / "summary" / "tests.csv");
    CHECK(tests.find("b1_k1_hills,b4_k1_hills") != std::string::npos);
    std::vector<double> a, b;
    std::istringstream th(slurp(out / "summary" / "threshold.csv"));
    std::string line;
    std::getline(th, line);
    while (std::getline(th, line)) {
        if (line.find(",hills,") == std::string::npos)
            continue;
        const double f = std::stod(line.substr(line.rfind(',') + 1));
        (line.rfind("b1_", 0) == 0 ? a : b).push_back(f);
    }
    REQUIRE(a.size() == 2);
    REQUIRE(b.size() == 2);
    const double p = oracle::rank_sum_p(a, b);
    std::istringstream tt(tests);
    std::getline(tt, line);
    bool found = false;
    while (std::getline(tt, line))
        if (line.rfind("b1_k1_hills,b4_k1_hills,", 0) == 0) {
            std::vector<std::string> cols;
            std::stringstream ss(line);
            std::string c;
            while (std::getline(ss, c, ','))
                cols.push_back(c);
            CHECK(std::stod(cols.at(3)) == doctest::Approx(p).epsilon(1e-12));
            found = true;
        }
    CHECK(found);

    const auto plots = cmd_plot(out);
    CHECK(plots.size() == 5);
    const auto first = slurp(plots.back());
    cmd_plot(out);
    CHECK(slurp(plots.back()) == first);
}

TEST_CASE("summarize reports missing runs")
{
    const auto out = temp_dir("missing");
    auto cfg = parse_config(kTiny);
    run_experiment(cfg, out, 1);
    fs::remove(run_log_path(out, experiment_cells(cfg)[1], 0));
    const auto report = cmd_summarize(out, cfg.threshold_fevals);
    CHECK_FALSE(report.problems.empty());
    CHECK(fs::exists(out / "summary" / "curve_b1_k1_hills_fevals.csv"));
}

TEST_CASE("svg output")
{
    svg::LineChart chart;
    chart.title = "t";
    chart.series.push_back({"const", {0, 1, 2}, {1, 1, 1}, {0, 0, 0}});
    const auto a = svg::render(chart);
    CHECK(a == svg::render(chart));
    CHECK(a.rfind("<svg", 0) == 0);

    const auto s = svg::box_stats({1, 2, 3, 4, 100});
    CHECK(s.median == 3.0);
    CHECK(s.q1 == 2.0);
    CHECK(s.q3 == 4.0);
    CHECK(s.whisker_hi == 4.0);
    CHECK(s.outliers == std::vector<double>{100.0});
    CHECK_THROWS(svg::box_stats({}));
}
