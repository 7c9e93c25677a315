#pragma once

// Data-parallel inner loops of the Gaussian-process surrogate. Each kernel has
// a scalar reference and optional vector variants; the active table is chosen
// once at runtime from CPU features (override with MORPHEVO_SIMD=scalar|avx2).

#include <cstddef>

namespace morphevo::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
    Isa isa;

    /// out[i * nb + j] = sf2 * matern52(|a_i - b_j| / ell) for row-major `a`
    /// (na x d) and column-major `b_cols` (d x nb, stride nb).
    void (*matern52_cross)(const double* a, std::size_t na, const double* b_cols, std::size_t nb, std::size_t d,
                           double ell, double sf2, double* out);

    /// Solves L Y = B in place for row-major lower-triangular L (n x n) and
    /// row-major B (n x m), one right-hand side per column.
    void (*forward_substitute)(const double* lower, std::size_t n, double* rhs, std::size_t m);

    /// out[j] = sum_i w[i] * mat[i * m + j]
    void (*weighted_column_sum)(const double* w, const double* mat, std::size_t n, std::size_t m, double* out);

    /// out[j] = sum_i mat[i * m + j]^2
    void (*column_sq_norm)(const double* mat, std::size_t n, std::size_t m, double* out);
};

const KernelTable& scalar_kernels() noexcept;
#if defined(MORPHEVO_HAVE_AVX2)
const KernelTable& avx2_kernels() noexcept;
#endif

bool isa_available(Isa isa) noexcept;
const KernelTable& kernels_for(Isa isa);
const KernelTable& active_kernels() noexcept;
const char* to_string(Isa isa) noexcept;

} // namespace morphevo::simd
