#pragma once

#include <span>
#include <vector>

#include "morphrl/domain/morphology.hpp"
#include "morphrl/domain/observation.hpp"
#include "morphrl/sim/terrain.hpp"

namespace morphrl {

inline constexpr int kDefaultHorizon = 1000;

struct SimConfig {
  double dt = 0.05;
  int horizon = kDefaultHorizon;
  double omega_max = 10.0;
  double k_spring = 0.5;
  double g_slide = 2.0;
  double ctrl_cost = 0.05;
  double reset_noise = 0.01;
  std::size_t terrain_samples = 8;
  double lookahead_spacing = 0.25;
};

struct SimState {
  int t = 0;
  double x = 0.0;
  std::vector<double> angles;
  std::vector<double> omegas;
};

struct StepResult {
  ModularObservation observation;
  double reward = 0.0;
  bool done = false;
  double distance = 0.0;  // body position x after the step
};

struct ResetResult {
  SimState state;
  Terrain terrain;
  ModularObservation observation;
};

// x = 0, t = 0, angles at initial_angle plus uniform ±reset_noise (clamped to
// the joint range), zero velocities; rough terrains draw a fresh profile.
ResetResult reset(const Morphology& m, TerrainKind kind, Rng& rng, const SimConfig& config = {});

// One semi-implicit Euler step of the torque-chain model:
//   τ_i = gear_i·a_i − damping_i·ω_i − k_spring·(θ_i − θ_init,i) − coupling_i·Σ_{j∈nb(i)}(θ_i − θ_j)
//   I_i = armature_i + mass_i·length_i²/3
//   ω_i ← clamp(ω_i + Δt·τ_i/I_i, ±ω_max); θ_i ← clamp(θ_i + Δt·ω_i, joint range), ω_i ← 0 on clamp
//   v = max(0, mean_i(length_i·ω_i·sin θ_i))·traction
//   x ← x + Δt·(v − g_slide·sin(slope(x)))
//   reward = Δx/Δt − ctrl_cost·mean(a²)
// Actions are clipped to [−1, 1]; traction = 1/(1+2|slope|) on rough terrain.
StepResult step(SimState& state, const Morphology& m, const Terrain& terrain, std::span<const double> action,
                const SimConfig& config = {});

ModularObservation observe(const SimState& state, const Morphology& m, const Terrain& terrain,
                           const SimConfig& config = {});

std::vector<double> lookahead(const SimState& state, const Terrain& terrain, std::size_t n_samples,
                              const SimConfig& config = {});

}  // namespace morphrl
