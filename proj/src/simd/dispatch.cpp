#include "morphevo/simd/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>

namespace morphevo::simd {

namespace {

Isa detect() noexcept
{
    Isa best = isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
    if (const char* env = std::getenv("MORPHEVO_SIMD")) {
        const std::string_view want(env);
        if (want == "scalar")
            return Isa::Scalar;
        if (want == "avx2" && isa_available(Isa::Avx2))
            return Isa::Avx2;
    }
    return best;
}

} // namespace

bool isa_available(Isa isa) noexcept
{
    switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(MORPHEVO_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
        return __builtin_cpu_supports("avx2");
#else
        return false;
#endif
    }
    return false;
}

const KernelTable& kernels_for(Isa isa)
{
    if (!isa_available(isa))
        throw std::runtime_error(std::string("kernel set not available on this CPU: ") + to_string(isa));
#if defined(MORPHEVO_HAVE_AVX2)
    if (isa == Isa::Avx2)
        return avx2_kernels();
#endif
    return scalar_kernels();
}

const KernelTable& active_kernels() noexcept
{
    static const KernelTable& table = kernels_for(detect());
    return table;
}

const char* to_string(Isa isa) noexcept
{
    return isa == Isa::Avx2 ? "avx2" : "scalar";
}

} // namespace morphevo::simd
