#pragma once

#include <string>

namespace morphevo {

enum class TerrainKind { Flat, Hills };

/// Heightfield profile along the travel axis. Hills are raised-cosine bumps
/// centred at x = k * hill_spacing for k >= 1.
struct TerrainSpec {
    TerrainKind kind = TerrainKind::Flat;
    double hill_spacing = 2.0;
    double hill_height = 0.35;
    double hill_width = 1.0;

    static TerrainSpec flat() { return {}; }
    static TerrainSpec hills() { return {TerrainKind::Hills}; }
};

double terrain_height(const TerrainSpec& spec, double x) noexcept;
double terrain_slope(const TerrainSpec& spec, double x) noexcept;

std::string to_string(TerrainKind k);
TerrainKind terrain_kind_from_string(const std::string& s);

} // namespace morphevo
