#include "morphevo/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "morphevo/simd/kernels.hpp"

namespace morphevo {

namespace {

// In-place Cholesky of a row-major SPD matrix; false if a pivot is not positive.
bool cholesky(std::vector<double>& a, std::size_t n)
{
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k)
            d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0))
            return false;
        const double ljj = std::sqrt(d);
        a[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k)
                s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / ljj;
        }
        for (std::size_t k = j + 1; k < n; ++k)
            a[j * n + k] = 0.0;
    }
    return true;
}

// Column-major copy for the cross-covariance kernel.
std::vector<double> columns(const PointSet& p)
{
    const std::size_t m = p.size();
    const std::size_t d = p.dim();
    std::vector<double> out(m * d);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < d; ++k)
            out[k * m + j] = p[j][k];
    return out;
}

} // namespace

void PointSet::push_back(std::span<const double> x)
{
    if (dim_ == 0 && data_.empty())
        dim_ = x.size();
    if (x.size() != dim_)
        throw std::invalid_argument("PointSet: dimension mismatch");
    data_.insert(data_.end(), x.begin(), x.end());
}

double matern52(double r, double length_scale, double signal_variance) noexcept
{
    const double u = std::sqrt(5.0) * r / length_scale;
    return signal_variance * (1.0 + u + u * u / 3.0) * std::exp(-u);
}

GpModel gp_fit(const PointSet& X, std::span<const double> y, const GpHyper& hyper)
{
    const std::size_t n = X.size();
    if (n == 0)
        throw std::invalid_argument("gp_fit: need at least one observation");
    if (y.size() != n)
        throw std::invalid_argument("gp_fit: " + std::to_string(n) + " points but " + std::to_string(y.size()) +
                                    " observations");
    for (double v : y)
        if (!std::isfinite(v))
            throw std::invalid_argument("gp_fit: observations must be finite");

    GpModel m;
    m.hyper = hyper;
    m.X = X;

    m.y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : y)
        var += (v - m.y_mean) * (v - m.y_mean);
    var /= static_cast<double>(n);
    m.y_scale = var > 0.0 ? std::sqrt(var) : 1.0;
    m.y_std.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        m.y_std[i] = (y[i] - m.y_mean) / m.y_scale;

    const auto& kern = simd::active_kernels();
    const auto cols = columns(X);
    std::vector<double> gram(n * n);
    kern.matern52_cross(X.data().data(), n, cols.data(), n, X.dim(), hyper.length_scale, hyper.signal_variance,
                        gram.data());
    // Exact symmetry, independent of the kernel's rounding.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            gram[j * n + i] = gram[i * n + j];

    for (double jitter = hyper.noise_variance;; jitter *= 10.0) {
        if (jitter > 1e-2 * (1.0 + 1e-9))
            throw IllConditioned("gp_fit: Cholesky failed with jitter up to 1e-2");
        m.chol = gram;
        for (std::size_t i = 0; i < n; ++i)
            m.chol[i * n + i] += jitter;
        if (cholesky(m.chol, n)) {
            m.jitter = jitter;
            break;
        }
    }

    // alpha = L^-T L^-1 y
    m.alpha = m.y_std;
    kern.forward_substitute(m.chol.data(), n, m.alpha.data(), 1);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = m.alpha[ii];
        for (std::size_t k = ii + 1; k < n; ++k)
            s -= m.chol[k * n + ii] * m.alpha[k];
        m.alpha[ii] = s / m.chol[ii * n + ii];
    }
    return m;
}

std::vector<Posterior> gp_posterior_batch(const GpModel& model, const PointSet& candidates)
{
    const std::size_t n = model.X.size();
    const std::size_t m = candidates.size();
    if (m == 0)
        return {};
    if (candidates.dim() != model.X.dim())
        throw std::invalid_argument("gp_posterior: candidate dimension does not match the model");

    const auto& kern = simd::active_kernels();
    const auto cols = columns(candidates);
    std::vector<double> kstar(n * m);
    kern.matern52_cross(model.X.data().data(), n, cols.data(), m, model.X.dim(), model.hyper.length_scale,
                        model.hyper.signal_variance, kstar.data());

    std::vector<double> mean(m);
    kern.weighted_column_sum(model.alpha.data(), kstar.data(), n, m, mean.data());
    kern.forward_substitute(model.chol.data(), n, kstar.data(), m);
    std::vector<double> explained(m);
    kern.column_sq_norm(kstar.data(), n, m, explained.data());

    std::vector<Posterior> out(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double var = std::max(0.0, model.hyper.signal_variance - explained[j]);
        out[j] = {model.y_mean + model.y_scale * mean[j], model.y_scale * std::sqrt(var)};
    }
    return out;
}

Posterior gp_posterior(const GpModel& model, std::span<const double> x)
{
    PointSet one;
    one.push_back(x);
    return gp_posterior_batch(model, one).front();
}

} // namespace morphevo
