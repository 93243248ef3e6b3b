#include "morphrl/sim/terrain.hpp"

#include <algorithm>

#include "morphrl/errors.hpp"

namespace morphrl {

std::string_view to_string(TerrainKind kind) {
  switch (kind) {
    case TerrainKind::flat: return "flat";
    case TerrainKind::incline: return "incline";
    case TerrainKind::variable: return "variable";
    case TerrainKind::obstacles: return "obstacles";
  }
  return "unknown";
}

TerrainKind parse_terrain_kind(std::string_view name) {
  for (TerrainKind k : {TerrainKind::flat, TerrainKind::incline, TerrainKind::variable, TerrainKind::obstacles}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown terrain kind '" + std::string(name) + "' (expected flat, incline, variable, obstacles)");
}

bool provides_lookahead(TerrainKind kind) { return kind == TerrainKind::variable || kind == TerrainKind::obstacles; }

double Terrain::slope_at(double x) const {
  if (kind == TerrainKind::flat) return 0.0;
  if (kind == TerrainKind::incline) return kInclineSlope;
  if (knot_x.empty() || x < knot_x.front() || x >= knot_x.back()) return 0.0;
  // Last knot with knot_x <= x; at coincident knots this picks the later one.
  const auto it = std::upper_bound(knot_x.begin(), knot_x.end(), x);
  const auto k = static_cast<std::size_t>(it - knot_x.begin()) - 1;
  const double x0 = knot_x[k], x1 = knot_x[k + 1];
  const double s0 = knot_slope[k], s1 = knot_slope[k + 1];
  if (x1 <= x0) return s1;
  return s0 + (s1 - s0) * (x - x0) / (x1 - x0);
}

Terrain generate_terrain(TerrainKind kind, Rng& rng) {
  Terrain t;
  t.kind = kind;
  t.seed = rng();
  Rng profile(t.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(profile); };
  auto knot = [&](double x, double s) {
    t.knot_x.push_back(x);
    t.knot_slope.push_back(s);
  };
  double x = 1.0;
  if (kind == TerrainKind::variable) {
    for (int b = 0; b < 5; ++b) {
      x += uniform(1.0, 4.0);
      const double len = uniform(2.0, 6.0);
      const double peak = uniform(-0.3, 0.3);
      knot(x, 0.0);
      knot(x + 0.5 * len, peak);
      knot(x + len, 0.0);
      x += len;
    }
  } else if (kind == TerrainKind::obstacles) {
    for (int b = 0; b < 10; ++b) {
      x += uniform(0.5, 3.0);
      const double s = unit(profile) < 0.5 ? -kMaxTerrainSlope : kMaxTerrainSlope;
      knot(x, 0.0);
      knot(x, s);
      knot(x + 0.3, s);
      knot(x + 0.3, 0.0);
      x += 0.3;
    }
  }
  return t;
}

std::vector<double> terrain_lookahead(double x, const Terrain& terrain, std::size_t n, double spacing) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = terrain.slope_at(x + spacing * static_cast<double>(k + 1));
  return out;
}

}  // namespace morphrl
