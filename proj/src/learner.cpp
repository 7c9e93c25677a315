#include "morphevo/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace morphevo {

int LearnConfig::n_init() const
{
    return std::max(1, static_cast<int>(std::lround(init_fraction * budget)));
}

void LearnConfig::validate() const
{
    if (budget < 1)
        throw std::invalid_argument("learn: budget must be >= 1");
    if (dim < 1)
        throw std::invalid_argument("learn: dimension must be >= 1");
    if (n_candidates < 1)
        throw std::invalid_argument("learn: n_candidates must be >= 1");
    if (!(init_fraction >= 0.0 && init_fraction < 1.0))
        throw std::invalid_argument("learn: init_fraction must lie in [0, 1)");
    if (budget > 1 && n_init() >= budget)
        throw std::invalid_argument("learn: initial design would use the whole budget");
    if (!(beta >= 0.0))
        throw std::invalid_argument("learn: beta must be non-negative");
}

PointSet lhs_sample(int n, int d, Rng& rng)
{
    if (n < 1 || d < 1)
        throw std::invalid_argument("lhs_sample: need n >= 1 and d >= 1");
    PointSet out(n, d);
    std::vector<int> strata(n);
    const double dn = n;
    for (int k = 0; k < d; ++k) {
        std::iota(strata.begin(), strata.end(), 0);
        std::shuffle(strata.begin(), strata.end(), rng);
        for (int i = 0; i < n; ++i) {
            const double upper = (strata[i] + 1) / dn;
            double x = (strata[i] + uniform01(rng)) / dn;
            while (x >= upper)
                x = std::nextafter(x, 0.0);
            out[i][k] = x;
        }
    }
    return out;
}

double ucb(double mu, double sigma, double beta) noexcept
{
    return mu + beta * sigma;
}

std::size_t select_ucb(const GpModel& model, const PointSet& candidates, double beta)
{
    const auto post = gp_posterior_batch(model, candidates);
    if (post.empty())
        throw std::invalid_argument("select_ucb: no candidates");
    std::size_t best = 0;
    double best_score = ucb(post[0].mu, post[0].sigma, beta);
    for (std::size_t i = 1; i < post.size(); ++i) {
        const double s = ucb(post[i].mu, post[i].sigma, beta);
        if (s > best_score) {
            best_score = s;
            best = i;
        }
    }
    return best;
}

std::vector<double> propose_next(const GpModel& model, const LearnConfig& cfg, Rng& rng)
{
    const auto candidates = lhs_sample(cfg.n_candidates, static_cast<int>(model.X.dim()), rng);
    const auto pick = select_ucb(model, candidates, cfg.beta);
    const auto x = candidates[pick];
    return {x.begin(), x.end()};
}

double surrogate_value(double fitness, std::span<const double> finite_so_far) noexcept
{
    if (std::isfinite(fitness))
        return fitness;
    if (finite_so_far.empty())
        return -1.0;
    return *std::min_element(finite_so_far.begin(), finite_so_far.end()) - 1.0;
}

LearnResult learn(const Objective& evaluate, const LearnConfig& cfg, Rng& rng)
{
    cfg.validate();
    LearnResult result;
    result.best_fitness = -std::numeric_limits<double>::infinity();
    result.history.reserve(cfg.budget);

    PointSet X;
    std::vector<double> finite;

    auto record = [&](std::vector<double> x) {
        const double f = evaluate(x);
        if (result.history.empty() || f > result.best_fitness) {
            result.best_fitness = f;
            result.best_x = x;
        }
        X.push_back(x);
        if (std::isfinite(f))
            finite.push_back(f);
        result.history.push_back({std::move(x), f});
    };

    if (cfg.budget == 1) {
        std::vector<double> x(cfg.dim);
        for (auto& v : x)
            v = uniform01(rng);
        record(std::move(x));
        return result;
    }

    const auto init = lhs_sample(cfg.n_init(), cfg.dim, rng);
    for (std::size_t i = 0; i < init.size(); ++i) {
        const auto row = init[i];
        record({row.begin(), row.end()});
    }
    while (static_cast<int>(result.history.size()) < cfg.budget) {
        std::vector<double> y;
        y.reserve(result.history.size());
        for (const auto& h : result.history)
            y.push_back(surrogate_value(h.fitness, finite));
        const auto model = gp_fit(X, y, cfg.gp);
        record(propose_next(model, cfg, rng));
    }
    return result;
}

} // namespace morphevo
