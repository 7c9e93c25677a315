#pragma once

#include <functional>
#include <span>
#include <vector>

#include "morphevo/gp.hpp"
#include "morphevo/rng.hpp"

namespace morphevo {

struct LearnConfig {
    int budget = 30;
    double init_fraction = 0.1;
    double beta = 3.0;
    int n_candidates = 1024;
    int dim = 5;
    GpHyper gp;

    /// max(1, round(init_fraction * budget)): 3 for 30, 5 for 50.
    int n_init() const;
    void validate() const;
};

struct LearnSample {
    std::vector<double> x;
    double fitness;
};

struct LearnResult {
    std::vector<double> best_x;
    double best_fitness;
    std::vector<LearnSample> history;
};

using Objective = std::function<double(std::span<const double>)>;

/// Latin hypercube design: one point per stratum [i/n, (i+1)/n) in every dimension.
PointSet lhs_sample(int n, int d, Rng& rng);

double ucb(double mu, double sigma, double beta) noexcept;

/// Index of the UCB-maximising candidate; ties go to the lowest index.
std::size_t select_ucb(const GpModel& model, const PointSet& candidates, double beta);

std::vector<double> propose_next(const GpModel& model, const LearnConfig& cfg, Rng& rng);

/// Value the surrogate sees for a diverged (-inf) evaluation.
double surrogate_value(double fitness, std::span<const double> finite_so_far) noexcept;

LearnResult learn(const Objective& evaluate, const LearnConfig& cfg, Rng& rng);

} // namespace morphevo
