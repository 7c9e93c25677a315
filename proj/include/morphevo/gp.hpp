#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace morphevo {

/// Row-major set of points in [0,1]^dim.
class PointSet {
public:
    PointSet() = default;
    PointSet(std::size_t count, std::size_t dim) : dim_(dim), data_(count * dim, 0.0) {}

    std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
    std::size_t dim() const noexcept { return dim_; }
    std::span<double> operator[](std::size_t i) noexcept { return {data_.data() + i * dim_, dim_}; }
    std::span<const double> operator[](std::size_t i) const noexcept { return {data_.data() + i * dim_, dim_}; }
    const std::vector<double>& data() const noexcept { return data_; }

    void push_back(std::span<const double> x);

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

/// Fixed kernel hyperparameters; nothing is fitted.
struct GpHyper {
    double length_scale = 0.2;
    double signal_variance = 1.0;
    double noise_variance = 1e-6;
};

double matern52(double r, double length_scale, double signal_variance = 1.0) noexcept;

class IllConditioned : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GpModel {
    GpHyper hyper;
    PointSet X;
    std::vector<double> y_std; ///< standardized observations
    double y_mean = 0.0;
    double y_scale = 1.0;
    double jitter = 0.0;       ///< diagonal term that made the factorization succeed
    std::vector<double> chol;  ///< row-major lower factor of K + jitter I
    std::vector<double> alpha; ///< (K + jitter I)^-1 y_std
};

struct Posterior {
    double mu;
    double sigma;
};

/// Retries the factorization with 10x jitter up to 1e-2 before throwing IllConditioned.
GpModel gp_fit(const PointSet& X, std::span<const double> y, const GpHyper& hyper = {});

Posterior gp_posterior(const GpModel& model, std::span<const double> x);

/// Posterior at every candidate, in fitness units.
std::vector<Posterior> gp_posterior_batch(const GpModel& model, const PointSet& candidates);

} // namespace morphevo
