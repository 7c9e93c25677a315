#include <doctest.h>

#include <cmath>
#include <vector>

#include "morphevo/rng.hpp"
#include "morphevo/simd/kernels.hpp"

using namespace morphevo;
using namespace morphevo::simd;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = 0.0, double hi = 1.0)
{
    std::vector<double> v(n);
    for (auto& x : v)
        x = lo + (hi - lo) * uniform01(rng);
    return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double rel)
{
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(std::abs(a[i] - b[i]) <= rel * std::max(1.0, std::abs(a[i])));
}

// Well-conditioned lower-triangular factor.
std::vector<double> random_lower(Rng& rng, std::size_t n)
{
    std::vector<double> l(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j)
            l[i * n + j] = uniform01(rng) - 0.5;
        l[i * n + i] = 1.0 + uniform01(rng);
    }
    return l;
}

} // namespace

TEST_CASE("scalar kernels are always available")
{
    CHECK(isa_available(Isa::Scalar));
    CHECK(kernels_for(Isa::Scalar).isa == Isa::Scalar);
    CHECK(&active_kernels() != nullptr);
}

TEST_CASE("scalar kernels against direct formulas")
{
    auto rng = make_rng({1});
    const auto& k = scalar_kernels();
    const std::size_t na = 3, nb = 4, d = 2;
    const auto a = random_vec(rng, na * d);
    const auto bc = random_vec(rng, d * nb);
    std::vector<double> out(na * nb);
    k.matern52_cross(a.data(), na, bc.data(), nb, d, 0.2, 1.5, out.data());
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j) {
            double r2 = 0.0;
            for (std::size_t t = 0; t < d; ++t)
                r2 += std::pow(a[i * d + t] - bc[t * nb + j], 2);
            const double u = std::sqrt(5.0) * std::sqrt(r2) / 0.2;
            CHECK(out[i * nb + j] == doctest::Approx(1.5 * (1 + u + u * u / 3) * std::exp(-u)).epsilon(1e-13));
        }
}

TEST_CASE("avx2 kernels match the scalar reference")
{
    if (!isa_available(Isa::Avx2)) {
        MESSAGE("AVX2 not available; skipping equivalence checks");
        return;
    }
    const auto& s = kernels_for(Isa::Scalar);
    const auto& v = kernels_for(Isa::Avx2);
    auto rng = make_rng({2});
    // Odd sizes exercise the vector tails.
    for (std::size_t n : {1u, 3u, 4u, 7u, 17u, 50u}) {
        for (std::size_t m : {1u, 2u, 5u, 8u, 13u, 1024u}) {
            for (std::size_t d : {1u, 5u, 20u, 40u}) {
                const auto a = random_vec(rng, n * d);
                const auto bc = random_vec(rng, d * m);
                std::vector<double> o1(n * m), o2(n * m);
                s.matern52_cross(a.data(), n, bc.data(), m, d, 0.2, 1.0, o1.data());
                v.matern52_cross(a.data(), n, bc.data(), m, d, 0.2, 1.0, o2.data());
                check_close(o1, o2, 1e-13);
            }
            const auto lower = random_lower(rng, n);
            auto r1 = random_vec(rng, n * m, -1.0, 1.0);
            auto r2 = r1;
            s.forward_substitute(lower.data(), n, r1.data(), m);
            v.forward_substitute(lower.data(), n, r2.data(), m);
            check_close(r1, r2, 1e-12);

            const auto w = random_vec(rng, n, -1.0, 1.0);
            const auto mat = random_vec(rng, n * m, -1.0, 1.0);
            std::vector<double> c1(m), c2(m);
            s.weighted_column_sum(w.data(), mat.data(), n, m, c1.data());
            v.weighted_column_sum(w.data(), mat.data(), n, m, c2.data());
            check_close(c1, c2, 1e-13);
            s.column_sq_norm(mat.data(), n, m, c1.data());
            v.column_sq_norm(mat.data(), n, m, c2.data());
            check_close(c1, c2, 1e-13);
        }
    }
}

TEST_CASE("avx2 exp covers the kernel's range")
{
    if (!isa_available(Isa::Avx2))
        return;
    // Distances from zero to far beyond the length scale, including exact zeros.
    const std::size_t m = 64;
    std::vector<double> a{0.0};
    std::vector<double> bc(m);
    for (std::size_t j = 0; j < m; ++j)
        bc[j] = j == 0 ? 0.0 : std::pow(1.4, static_cast<double>(j)) * 1e-4;
    std::vector<double> o1(m), o2(m);
    kernels_for(Isa::Scalar).matern52_cross(a.data(), 1, bc.data(), m, 1, 0.2, 1.0, o1.data());
    kernels_for(Isa::Avx2).matern52_cross(a.data(), 1, bc.data(), m, 1, 0.2, 1.0, o2.data());
    CHECK(o2[0] == 1.0);
    // Far tail (exp argument below -700) is flushed to zero.
    for (std::size_t j = 0; j < m; ++j)
        CHECK(std::abs(o1[j] - o2[j]) <= 1e-13 * o1[j] + 1e-290);
}
