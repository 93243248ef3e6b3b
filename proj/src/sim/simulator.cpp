#include "morphrl/sim/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "morphrl/errors.hpp"

namespace morphrl {

ResetResult reset(const Morphology& m, TerrainKind kind, Rng& rng, const SimConfig& config) {
  ResetResult r;
  r.terrain = generate_terrain(kind, rng);
  const std::size_t n = m.limb_count();
  r.state.angles.resize(n);
  r.state.omegas.assign(n, 0.0);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const LimbContext& l = m.limbs[i];
    double a = l.initial_angle;
    if (config.reset_noise > 0.0) a += config.reset_noise * noise(rng);
    r.state.angles[i] = std::clamp(a, l.joint_low, l.joint_high);
  }
  r.observation = observe(r.state, m, r.terrain, config);
  return r;
}

std::vector<double> lookahead(const SimState& state, const Terrain& terrain, std::size_t n_samples,
                              const SimConfig& config) {
  if (n_samples < 1) throw InvalidInput("lookahead needs at least one sample");
  return terrain_lookahead(state.x, terrain, n_samples, config.lookahead_spacing);
}

ModularObservation observe(const SimState& state, const Morphology& m, const Terrain& terrain,
                           const SimConfig& config) {
  const std::size_t n = m.limb_count();
  if (state.angles.size() != n || state.omegas.size() != n) {
    throw InvalidInput("observe: state does not belong to morphology '" + m.id + "'");
  }
  UnderlyingState u;
  u.angles = state.angles;
  u.omegas = state.omegas;
  u.tip_heights.resize(n);
  const double slope = terrain.slope_at(state.x);
  for (std::size_t i = 0; i < n; ++i) u.tip_heights[i] = std::sin(state.angles[i] + slope);
  std::vector<double> ahead;
  if (provides_lookahead(terrain.kind)) ahead = lookahead(state, terrain, config.terrain_samples, config);
  return observe(u, m, ahead);
}

StepResult step(SimState& state, const Morphology& m, const Terrain& terrain, std::span<const double> action,
                const SimConfig& config) {
  const std::size_t n = m.limb_count();
  if (action.size() != n) {
    throw InvalidInput("step: action has " + std::to_string(action.size()) + " entries for " + std::to_string(n) +
                       " limbs");
  }
  if (state.angles.size() != n) throw InvalidInput("step: state does not belong to morphology '" + m.id + "'");
  if (state.t >= config.horizon) throw UsageError("step called on a finished episode");

  const auto neighbors = limb_neighbors(m);
  std::vector<double> a(n);
  double ctrl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = std::clamp(action[i], -1.0, 1.0);
    ctrl += a[i] * a[i];
  }
  ctrl /= static_cast<double>(n);

  std::vector<double> torque(n);
  for (std::size_t i = 0; i < n; ++i) {
    const LimbContext& l = m.limbs[i];
    double coupling = 0.0;
    for (int j : neighbors[i]) coupling += state.angles[i] - state.angles[static_cast<std::size_t>(j)];
    torque[i] = l.gear * a[i] - l.damping * state.omegas[i] - config.k_spring * (state.angles[i] - l.initial_angle) -
                l.coupling * coupling;
  }

  double drive = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const LimbContext& l = m.limbs[i];
    const double inertia = l.armature + l.mass * l.length * l.length / 3.0;
    double w = std::clamp(state.omegas[i] + config.dt * torque[i] / inertia, -config.omega_max, config.omega_max);
    double th = state.angles[i] + config.dt * w;
    if (th < l.joint_low || th > l.joint_high) {
      th = std::clamp(th, l.joint_low, l.joint_high);
      w = 0.0;
    }
    state.angles[i] = th;
    state.omegas[i] = w;
    drive += l.length * w * std::sin(th);
  }

  const double slope = terrain.slope_at(state.x);
  const bool rough = terrain.kind == TerrainKind::variable || terrain.kind == TerrainKind::obstacles;
  const double traction = rough ? 1.0 / (1.0 + 2.0 * std::abs(slope)) : 1.0;
  const double v = std::max(0.0, drive / static_cast<double>(n)) * traction;
  const double dx = config.dt * (v - config.g_slide * std::sin(slope));
  state.x += dx;
  state.t += 1;

  StepResult r;
  r.reward = dx / config.dt - config.ctrl_cost * ctrl;
  r.done = state.t >= config.horizon;
  r.distance = state.x;
  r.observation = observe(state, m, terrain, config);
  return r;
}

}  // namespace morphrl
