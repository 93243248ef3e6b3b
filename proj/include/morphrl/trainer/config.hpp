#pragma once

#include <cstddef>
#include <cstdint>

#include "morphrl/sim/simulator.hpp"
#include "morphrl/sim/terrain.hpp"

namespace morphrl {

struct TrainerConfig {
  double gamma = 0.99;
  double lam = 0.95;
  double clip_eps = 0.2;
  double lr = 3e-4;
  std::size_t epochs_per_iter = 4;
  std::size_t minibatch_chunks = 8;
  double kl_max = 3.0;
  std::size_t chunk_m = 80;
  std::size_t burn_in_l = 20;
  // Chunk stride m/2 instead of m − l; burn-in then grows to the overlap.
  bool half_overlap = false;
  // Transitions per env per iteration; a whole number of episodes.
  std::size_t rollout_steps = 1000;
  // 0 means one env per training robot.
  std::size_t num_envs = 0;
  bool stored_hidden = true;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.5;
  std::size_t total_iters = 200;
  // 0 disables periodic checkpoints; the final one is always written.
  std::size_t checkpoint_every = 50;
  TerrainKind terrain = TerrainKind::flat;
  SimConfig sim;
  std::uint64_t seed = 0;
};

// Throws ConfigError naming the offending field.
void validate_trainer_config(const TrainerConfig& config);

// Chunk start spacing implied by the config.
std::size_t chunk_stride(const TrainerConfig& config);

}  // namespace morphrl
