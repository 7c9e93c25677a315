#include "morphevo/terrain.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace morphevo {

namespace {

// Offset from the nearest bump centre, or NaN outside every bump window.
double bump_offset(const TerrainSpec& spec, double x) noexcept
{
    const double k = std::round(x / spec.hill_spacing);
    if (k < 1.0)
        return std::nan("");
    const double u = x - k * spec.hill_spacing;
    return std::abs(u) <= 0.5 * spec.hill_width ? u : std::nan("");
}

} // namespace

double terrain_height(const TerrainSpec& spec, double x) noexcept
{
    if (spec.kind == TerrainKind::Flat)
        return 0.0;
    const double u = bump_offset(spec, x);
    if (std::isnan(u))
        return 0.0;
    return 0.5 * spec.hill_height * (1.0 + std::cos(2.0 * std::numbers::pi * u / spec.hill_width));
}

double terrain_slope(const TerrainSpec& spec, double x) noexcept
{
    if (spec.kind == TerrainKind::Flat)
        return 0.0;
    const double u = bump_offset(spec, x);
    if (std::isnan(u))
        return 0.0;
    const double w = 2.0 * std::numbers::pi / spec.hill_width;
    return -0.5 * spec.hill_height * w * std::sin(w * u);
}

std::string to_string(TerrainKind k)
{
    return k == TerrainKind::Flat ? "flat" : "hills";
}

TerrainKind terrain_kind_from_string(const std::string& s)
{
    if (s == "flat")
        return TerrainKind::Flat;
    if (s == "hills")
        return TerrainKind::Hills;
    throw std::invalid_argument("unknown terrain '" + s + "'");
}

} // namespace morphevo
