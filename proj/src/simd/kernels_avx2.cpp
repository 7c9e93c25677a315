#include "morphevo/simd/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace morphevo::simd {

namespace {

// exp(x) for x <= 0 via Cephes-style range reduction and a (2,3) Pade form;
// within a couple of ulp of std::exp down to -700, flushed to zero below.
inline __m256d exp_nonpositive(__m256d x)
{
    const __m256d lo = _mm256_set1_pd(-700.0);
    const __m256d keep = _mm256_cmp_pd(x, lo, _CMP_GE_OQ);
    x = _mm256_max_pd(x, lo);

    const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
    const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_sub_pd(x, _mm256_mul_pd(n, c1));
    r = _mm256_sub_pd(r, _mm256_mul_pd(n, c2));

    const __m256d rr = _mm256_mul_pd(r, r);
    __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
    p = _mm256_add_pd(_mm256_mul_pd(p, rr), _mm256_set1_pd(3.02994407707441961300e-2));
    p = _mm256_add_pd(_mm256_mul_pd(p, rr), _mm256_set1_pd(9.99999999999999999910e-1));
    p = _mm256_mul_pd(p, r);

    __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
    q = _mm256_add_pd(_mm256_mul_pd(q, rr), _mm256_set1_pd(2.52448340349684104192e-3));
    q = _mm256_add_pd(_mm256_mul_pd(q, rr), _mm256_set1_pd(2.27265548208155028766e-1));
    q = _mm256_add_pd(_mm256_mul_pd(q, rr), _mm256_set1_pd(2.00000000000000000009e0));

    const __m256d one = _mm256_set1_pd(1.0);
    __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
    e = _mm256_add_pd(one, _mm256_add_pd(e, e));

    // Scale by 2^n through the exponent field.
    const __m128i n32 = _mm256_cvtpd_epi32(n);
    __m256i bits = _mm256_cvtepi32_epi64(n32);
    bits = _mm256_add_epi64(bits, _mm256_set1_epi64x(1023));
    bits = _mm256_slli_epi64(bits, 52);
    return _mm256_and_pd(keep, _mm256_mul_pd(e, _mm256_castsi256_pd(bits)));
}

void matern52_cross(const double* a, std::size_t na, const double* b_cols, std::size_t nb, std::size_t d,
                    double ell, double sf2, double* out)
{
    const double sqrt5 = std::sqrt(5.0);
    const __m256d vsqrt5 = _mm256_set1_pd(sqrt5);
    const __m256d vell = _mm256_set1_pd(ell);
    const __m256d vsf2 = _mm256_set1_pd(sf2);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d three = _mm256_set1_pd(3.0);
    const __m256d zero = _mm256_setzero_pd();

    for (std::size_t i = 0; i < na; ++i) {
        const double* ai = a + i * d;
        std::size_t j = 0;
        for (; j + 4 <= nb; j += 4) {
            __m256d r2 = zero;
            for (std::size_t k = 0; k < d; ++k) {
                const __m256d diff = _mm256_sub_pd(_mm256_set1_pd(ai[k]), _mm256_loadu_pd(b_cols + k * nb + j));
                r2 = _mm256_add_pd(r2, _mm256_mul_pd(diff, diff));
            }
            const __m256d u = _mm256_div_pd(_mm256_mul_pd(vsqrt5, _mm256_sqrt_pd(r2)), vell);
            const __m256d poly = _mm256_add_pd(_mm256_add_pd(one, u), _mm256_div_pd(_mm256_mul_pd(u, u), three));
            const __m256d k = _mm256_mul_pd(_mm256_mul_pd(vsf2, poly), exp_nonpositive(_mm256_sub_pd(zero, u)));
            _mm256_storeu_pd(out + i * nb + j, k);
        }
        for (; j < nb; ++j) {
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
            const __m256d vl = _mm256_set1_pd(l);
            const double* yk = rhs + k * m;
            std::size_t j = 0;
            for (; j + 4 <= m; j += 4) {
                const __m256d acc = _mm256_sub_pd(_mm256_loadu_pd(yi + j), _mm256_mul_pd(vl, _mm256_loadu_pd(yk + j)));
                _mm256_storeu_pd(yi + j, acc);
            }
            for (; j < m; ++j)
                yi[j] -= l * yk[j];
        }
        const double diag = lower[i * n + i];
        const __m256d vd = _mm256_set1_pd(diag);
        std::size_t j = 0;
        for (; j + 4 <= m; j += 4)
            _mm256_storeu_pd(yi + j, _mm256_div_pd(_mm256_loadu_pd(yi + j), vd));
        for (; j < m; ++j)
            yi[j] /= diag;
    }
}

void weighted_column_sum(const double* w, const double* mat, std::size_t n, std::size_t m, double* out)
{
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t i = 0; i < n; ++i)
            acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(w[i]), _mm256_loadu_pd(mat + i * m + j)));
        _mm256_storeu_pd(out + j, acc);
    }
    for (; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += w[i] * mat[i * m + j];
        out[j] = acc;
    }
}

void column_sq_norm(const double* mat, std::size_t n, std::size_t m, double* out)
{
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t i = 0; i < n; ++i) {
            const __m256d v = _mm256_loadu_pd(mat + i * m + j);
            acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
        }
        _mm256_storeu_pd(out + j, acc);
    }
    for (; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += mat[i * m + j] * mat[i * m + j];
        out[j] = acc;
    }
}

constexpr KernelTable kAvx2{Isa::Avx2, matern52_cross, forward_substitute, weighted_column_sum, column_sq_norm};

} // namespace

const KernelTable& avx2_kernels() noexcept
{
    return kAvx2;
}

} // namespace morphevo::simd
