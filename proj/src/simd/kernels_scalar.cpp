#include "morphevo/simd/kernels.hpp"

#include <cmath>

namespace morphevo::simd {

namespace {

void matern52_cross(const double* a, std::size_t na, const double* b_cols, std::size_t nb, std::size_t d,
                    double ell, double sf2, double* out)
{
    const double sqrt5 = std::sqrt(5.0);
    for (std::size_t i = 0; i < na; ++i) {
        const double* ai = a + i * d;
        for (std::size_t j = 0; j < nb; ++j) {
            double r2 = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = ai[k] - b_cols[k * nb + j];
                r2 += diff * diff;
            }
            const double u = sqrt5 * std::sqrt(r2) / ell;
            out[i * nb + j] = sf2 * (1.0 + u + u * u / 3.0) * std::exp(-u);
        }
    }
}

void forward_substitute(const double* lower, std::size_t n, double* rhs, std::size_t m)
{
    for (std::size_t i = 0; i < n; ++i) {
        double* yi = rhs + i * m;
        for (std::size_t k = 0; k < i; ++k) {
            const double l = lower[i * n + k];
            const double* yk = rhs + k * m;
            for (std::size_t j = 0; j < m; ++j)
                yi[j] -= l * yk[j];
        }
        const double diag = lower[i * n + i];
        for (std::size_t j = 0; j < m; ++j)
            yi[j] /= diag;
    }
}

void weighted_column_sum(const double* w, const double* mat, std::size_t n, std::size_t m, double* out)
{
    for (std::size_t j = 0; j < m; ++j)
        out[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            out[j] += w[i] * mat[i * m + j];
}

void column_sq_norm(const double* mat, std::size_t n, std::size_t m, double* out)
{
    for (std::size_t j = 0; j < m; ++j)
        out[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            out[j] += mat[i * m + j] * mat[i * m + j];
}

constexpr KernelTable kScalar{Isa::Scalar, matern52_cross, forward_substitute, weighted_column_sum, column_sq_norm};

} // namespace

const KernelTable& scalar_kernels() noexcept
{
    return kScalar;
}

} // namespace morphevo::simd
