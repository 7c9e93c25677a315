#pragma once

#include <span>
#include <string>
#include <vector>

#include "morphevo/runlog.hpp"

namespace morphevo {

enum class Axis { Morphologies, Fevals };

struct CurvePoint {
    double x;
    double mean;
    double std; ///< population standard deviation across runs
};

/// Right-continuous step interpolation of each run's population mean fitness,
/// averaged across runs. Grid points before any run has a generation are omitted.
std::vector<CurvePoint> mean_fitness_curve(std::span<const RunLog> logs, Axis axis, std::span<const double> grid);

/// Generation boundaries (x values) of a run along `axis`.
std::vector<double> generation_boundaries(const RunLog& log, Axis axis);

/// Population mean fitness of the first generation at or past the threshold.
double fitness_at_threshold(const RunLog& log, long threshold_fevals);

enum class TestMethod { Exact, NormalApprox };

struct TestResult {
    double statistic; ///< Mann-Whitney U of the first sample
    double p_two_sided;
    TestMethod method;
};

/// Midranks (1-based) of `values`.
std::vector<double> midranks(std::span<const double> values);

/// Two-sample rank-sum test. Exact null distribution when both samples have
/// at most 12 values, otherwise normal approximation with tie and continuity
/// corrections.
TestResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b);

const char* to_string(Axis axis) noexcept;
const char* to_string(TestMethod m) noexcept;

} // namespace morphevo
