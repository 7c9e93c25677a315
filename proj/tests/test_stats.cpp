#include <doctest.h>

#include <cmath>

#include "morphevo/rng.hpp"
#include "morphevo/stats.hpp"
#include "oracles.hpp"

using namespace morphevo;

namespace {

RunLog synthetic_log(std::vector<std::pair<long, std::vector<double>>> gens, long morph_step = 4)
{
    RunLog log;
    log.run_id = "syn";
    int g = 0;
    for (auto& [fevals, fits] : gens) {
        GenerationRecord r;
        r.generation = g;
        r.cum_fevals = fevals;
        r.morphologies = morph_step * (g + 1);
        for (std::size_t i = 0; i < fits.size(); ++i)
            r.population.emplace_back(static_cast<long>(i), fits[i]);
        log.generations.push_back(r);
        ++g;
    }
    return log;
}

RunLog random_log(Rng& rng, int gens)
{
    std::vector<std::pair<long, std::vector<double>>> g;
    long fevals = 0;
    for (int i = 0; i < gens; ++i) {
        fevals += 1 + uniform_int(rng, 0, 20);
        std::vector<double> fits(4);
        for (auto& f : fits)
            f = uniform01(rng) * 3 - 1;
        if (uniform_int(rng, 0, 5) == 0)
            fits[0] = -INFINITY;
        g.emplace_back(fevals, fits);
    }
    return synthetic_log(g);
}

// Naive scan: the latest generation at or before x, averaged and spread across runs.
std::vector<CurvePoint> naive_curve(const std::vector<RunLog>& logs, Axis axis, const std::vector<double>& grid)
{
    std::vector<CurvePoint> out;
    for (double x : grid) {
        std::vector<double> vals;
        for (const auto& l : logs) {
            const GenerationRecord* hit = nullptr;
            for (const auto& g : l.generations) {
                const double b = axis == Axis::Fevals ? static_cast<double>(g.cum_fevals)
                                                      : static_cast<double>(g.morphologies);
                if (b <= x)
                    hit = &g;
            }
            if (!hit)
                break;
            double s = 0.0;
            int n = 0;
            for (const auto& [id, f] : hit->population)
                if (std::isfinite(f)) {
                    s += f;
                    ++n;
                }
            vals.push_back(s / n);
        }
        if (vals.size() != logs.size())
            continue;
        double m = 0.0;
        for (double v : vals)
            m += v;
        m /= static_cast<double>(vals.size());
        double var = 0.0;
        for (double v : vals)
            var += (v - m) * (v - m);
        out.push_back({x, m, std::sqrt(var / static_cast<double>(vals.size()))});
    }
    return out;
}

} // namespace

TEST_CASE("curve of one run at its own boundaries")
{
    const auto log = synthetic_log({{10, {1, 2}}, {20, {3, 5}}, {30, {0, 0}}});
    const std::vector<RunLog> logs{log};
    const auto grid = generation_boundaries(log, Axis::Fevals);
    CHECK(grid == std::vector<double>{10, 20, 30});
    const auto c = mean_fitness_curve(logs, Axis::Fevals, grid);
    REQUIRE(c.size() == 3);
    CHECK(c[0].mean == 1.5);
    CHECK(c[1].mean == 4.0);
    CHECK(c[2].mean == 0.0);
    for (const auto& p : c)
        CHECK(p.std == 0.0);
}

TEST_CASE("curve of two constant runs")
{
    const std::vector<RunLog> logs{synthetic_log({{5, {1, 1}}, {10, {1, 1}}}),
                                   synthetic_log({{5, {3, 3}}, {10, {3, 3}}})};
    const std::vector<double> grid{0, 5, 7, 10, 100};
    const auto c = mean_fitness_curve(logs, Axis::Fevals, grid);
    REQUIRE(c.size() == 4); // x = 0 precedes every run
    for (const auto& p : c) {
        CHECK(p.mean == 2.0);
        CHECK(p.std == 1.0);
    }
}

TEST_CASE("curve matches a naive rescan")
{
    auto rng = make_rng({8});
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<RunLog> logs;
        for (int r = 0; r < 1 + trial % 4; ++r)
            logs.push_back(random_log(rng, 3 + uniform_int(rng, 0, 6)));
        for (auto axis : {Axis::Fevals, Axis::Morphologies}) {
            std::vector<double> grid;
            for (int i = 0; i < 40; ++i)
                grid.push_back(static_cast<double>(uniform_int(rng, 0, 150)));
            std::sort(grid.begin(), grid.end());
            const auto got = mean_fitness_curve(logs, axis, grid);
            const auto ref = naive_curve(logs, axis, grid);
            REQUIRE(got.size() == ref.size());
            for (std::size_t i = 0; i < got.size(); ++i) {
                CHECK(got[i].x == ref[i].x);
                CHECK(got[i].mean == doctest::Approx(ref[i].mean).epsilon(1e-12));
                CHECK(got[i].std == doctest::Approx(ref[i].std).epsilon(1e-9).scale(1.0));
            }
        }
    }
}

TEST_CASE("fitness at threshold")
{
    const auto log = synthetic_log({{10, {1, 1}}, {20, {2, 4}}, {30, {5, 5}}});
    CHECK(fitness_at_threshold(log, 0) == 1.0);
    CHECK(fitness_at_threshold(log, 20) == 3.0);
    CHECK(fitness_at_threshold(log, 21) == 5.0);
    CHECK_THROWS_AS(fitness_at_threshold(log, 31), std::out_of_range);

    auto rng = make_rng({9});
    for (int t = 0; t < 50; ++t) {
        const auto l = random_log(rng, 8);
        const long th = uniform_int(rng, 0, static_cast<int>(l.generations.back().cum_fevals));
        double expect = NAN;
        for (const auto& g : l.generations)
            if (g.cum_fevals >= th) {
                expect = g.mean_fitness();
                break;
            }
        CHECK(fitness_at_threshold(l, th) == expect);
    }
}

TEST_CASE("midranks")
{
    const std::vector<double> v{3.0, 1.0, 3.0, 2.0};
    CHECK(midranks(v) == std::vector<double>{3.5, 1.0, 3.5, 2.0});
}

TEST_CASE("rank-sum examples")
{
    const std::vector<double> a{1, 2, 3, 4, 5};
    const std::vector<double> b{6, 7, 8, 9, 10};
    const auto r = wilcoxon_rank_sum(a, b);
    CHECK(r.method == TestMethod::Exact);
    CHECK(std::abs(r.p_two_sided - 2.0 / 252.0) < 1e-12);
    CHECK(r.statistic == 0.0);
    CHECK(std::abs(oracle::rank_sum_p(a, b) - 2.0 / 252.0) < 1e-12);

    const auto same = wilcoxon_rank_sum(a, a);
    CHECK(same.p_two_sided == 1.0);
    CHECK(same.statistic == 12.5);

    const std::vector<double> ta{1, 2, 3, 4, 5};
    const std::vector<double> tb{5, 6, 7, 8, 9};
    CHECK(wilcoxon_rank_sum(ta, tb).p_two_sided == doctest::Approx(oracle::rank_sum_p(ta, tb)).epsilon(1e-12));
}

TEST_CASE("rank-sum exact p against full enumeration")
{
    auto rng = make_rng({10});
    for (int t = 0; t < 200; ++t) {
        const int na = 1 + uniform_int(rng, 0, 6);
        const int nb = 1 + uniform_int(rng, 0, 6);
        std::vector<double> a(static_cast<std::size_t>(na)), b(static_cast<std::size_t>(nb));
        for (auto& v : a)
            v = uniform_int(rng, 0, 6);
        for (auto& v : b)
            v = uniform_int(rng, 0, 8);
        const auto r = wilcoxon_rank_sum(a, b);
        CHECK(r.method == TestMethod::Exact);
        CHECK(std::abs(r.p_two_sided - oracle::rank_sum_p(a, b)) < 1e-12);
        CHECK(std::abs(r.p_two_sided - wilcoxon_rank_sum(b, a).p_two_sided) < 1e-12);
    }
}

TEST_CASE("rank-sum normal approximation for large samples")
{
    std::vector<double> a, b;
    for (int i = 0; i < 20; ++i) {
        a.push_back(i);
        b.push_back(i + 10.5);
    }
    const auto r = wilcoxon_rank_sum(a, b);
    CHECK(r.method == TestMethod::NormalApprox);
    CHECK(r.p_two_sided > 0.0);
    CHECK(r.p_two_sided < 0.01);
    const auto s = wilcoxon_rank_sum(b, a);
    CHECK(r.p_two_sided == doctest::Approx(s.p_two_sided));
    CHECK(r.statistic + s.statistic == doctest::Approx(400.0));
    CHECK_THROWS(wilcoxon_rank_sum(std::vector<double>{}, b));
}
