#include "morphevo/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace morphevo {

namespace {

constexpr std::size_t kExactLimit = 12;

double boundary(const GenerationRecord& g, Axis axis)
{
    return axis == Axis::Morphologies ? static_cast<double>(g.morphologies) : static_cast<double>(g.cum_fevals);
}

// Population mean of the last generation with boundary <= x, or NaN.
double step_value(const RunLog& log, Axis axis, double x)
{
    double v = std::nan("");
    for (const auto& g : log.generations) {
        if (boundary(g, axis) > x)
            break;
        v = g.mean_fitness();
    }
    return v;
}

} // namespace

std::vector<double> generation_boundaries(const RunLog& log, Axis axis)
{
    std::vector<double> out;
    for (const auto& g : log.generations)
        out.push_back(boundary(g, axis));
    return out;
}

std::vector<CurvePoint> mean_fitness_curve(std::span<const RunLog> logs, Axis axis, std::span<const double> grid)
{
    if (logs.empty())
        throw std::invalid_argument("mean_fitness_curve: no run logs");
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw std::invalid_argument("mean_fitness_curve: grid must be ascending");

    std::vector<CurvePoint> out;
    std::vector<double> values(logs.size());
    for (double x : grid) {
        bool complete = true;
        for (std::size_t r = 0; r < logs.size() && complete; ++r) {
            values[r] = step_value(logs[r], axis, x);
            complete = !std::isnan(values[r]);
        }
        if (!complete)
            continue;
        const double n = static_cast<double>(values.size());
        const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
        double var = 0.0;
        for (double v : values)
            var += (v - mean) * (v - mean);
        out.push_back({x, mean, std::sqrt(var / n)});
    }
    return out;
}

double fitness_at_threshold(const RunLog& log, long threshold_fevals)
{
    for (const auto& g : log.generations)
        if (g.cum_fevals >= threshold_fevals)
            return g.mean_fitness();
    throw std::out_of_range("fitness_at_threshold: run '" + log.run_id + "' ends at " +
                            std::to_string(log.total_fevals()) + " evaluations, before " +
                            std::to_string(threshold_fevals));
}

std::vector<double> midranks(std::span<const double> values)
{
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return values[i] < values[j]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]])
            ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

TestResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b)
{
    if (a.empty() || b.empty())
        throw std::invalid_argument("wilcoxon_rank_sum: both samples must be non-empty");
    const std::size_t na = a.size();
    const std::size_t nb = b.size();
    const std::size_t n = na + nb;

    std::vector<double> all(a.begin(), a.end());
    all.insert(all.end(), b.begin(), b.end());
    const auto ranks = midranks(all);
    const double rank_sum = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(na), 0.0);
    const double u = rank_sum - 0.5 * static_cast<double>(na * (na + 1));

    if (na <= kExactLimit && nb <= kExactLimit) {
        // Midranks are multiples of 1/2, so doubled ranks are integers and the
        // null distribution of the doubled rank sum can be counted exactly.
        std::vector<long> doubled(n);
        long total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            doubled[i] = std::lround(2.0 * ranks[i]);
            total += doubled[i];
        }
        // ways[k][s]: subsets of size k with doubled rank sum s.
        std::vector<std::vector<double>> ways(na + 1, std::vector<double>(total + 1, 0.0));
        ways[0][0] = 1.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = std::min(i + 1, na); k >= 1; --k)
                for (long s = total; s >= doubled[i]; --s)
                    ways[k][s] += ways[k - 1][s - doubled[i]];

        const long expected2 = static_cast<long>(na * (n + 1)); // doubled mean rank sum
        const long observed = std::lround(2.0 * rank_sum);
        const long dev = std::abs(observed - expected2);
        double extreme = 0.0;
        double all_ways = 0.0;
        for (long s = 0; s <= total; ++s) {
            all_ways += ways[na][s];
            if (std::abs(s - expected2) >= dev)
                extreme += ways[na][s];
        }
        return {u, std::min(1.0, extreme / all_ways), TestMethod::Exact};
    }

    double tie_term = 0.0;
    {
        std::vector<double> sorted = all;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < n;) {
            std::size_t j = i;
            while (j + 1 < n && sorted[j + 1] == sorted[i])
                ++j;
            const double t = static_cast<double>(j - i + 1);
            tie_term += t * t * t - t;
            i = j + 1;
        }
    }
    const double dna = static_cast<double>(na);
    const double dnb = static_cast<double>(nb);
    const double dn = static_cast<double>(n);
    const double mean_u = 0.5 * dna * dnb;
    const double var_u = dna * dnb / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    if (!(var_u > 0.0))
        return {u, 1.0, TestMethod::NormalApprox};
    const double z = std::max(0.0, std::abs(u - mean_u) - 0.5) / std::sqrt(var_u);
    return {u, std::min(1.0, std::erfc(z / std::sqrt(2.0))), TestMethod::NormalApprox};
}

const char* to_string(Axis axis) noexcept
{
    return axis == Axis::Morphologies ? "morphologies" : "fevals";
}

const char* to_string(TestMethod m) noexcept
{
    return m == TestMethod::Exact ? "exact" : "normal-approx";
}

} // namespace morphevo
