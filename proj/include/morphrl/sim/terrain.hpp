#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "morphrl/domain/generate.hpp"

namespace morphrl {

enum class TerrainKind { flat, incline, variable, obstacles };

std::string_view to_string(TerrainKind kind);
// Throws ConfigError for unknown names.
TerrainKind parse_terrain_kind(std::string_view name);

// Only the rough terrains hand the policy a lookahead profile.
bool provides_lookahead(TerrainKind kind);

inline constexpr double kInclineSlope = 0.17453292519943295;  // 10 degrees
inline constexpr double kMaxTerrainSlope = 0.35;

// Slope profile over position; piecewise-linear between knots, zero outside
// them (constant for incline). Coincident knots encode steps.
struct Terrain {
  TerrainKind kind = TerrainKind::flat;
  std::uint64_t seed = 0;
  std::vector<double> knot_x;
  std::vector<double> knot_slope;

  double slope_at(double x) const;
};

// Flat and incline are constant. Variable terrain interleaves 5 triangular
// slope bumps (2–6 m long, peak |slope| ≤ 0.3) with 1–4 m flat stretches;
// obstacles are 10 steep 0.3 m segments (slope ±0.35) separated by
// 0.5–3 m of flat ground. The profile seed is drawn from rng.
Terrain generate_terrain(TerrainKind kind, Rng& rng);

// Slopes at x + spacing·k for k = 1..n.
std::vector<double> terrain_lookahead(double x, const Terrain& terrain, std::size_t n, double spacing = 0.25);

}  // namespace morphrl
