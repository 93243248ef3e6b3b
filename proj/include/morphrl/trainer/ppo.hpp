#pragma once

#include <functional>
#include <vector>

#include "morphrl/arch/policy.hpp"
#include "morphrl/numeric/optim.hpp"
#include "morphrl/trainer/chunks.hpp"
#include "morphrl/trainer/config.hpp"

namespace morphrl {

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  bool early_stopped = false;
  std::size_t minibatches = 0;  // updates actually applied
};

struct ChunkLoss {
  Var loss;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double kl_sum = 0.0;  // Σ (logp_old − logp_new) over trained steps
  std::size_t steps = 0;
};

// Replays one chunk from its initial hidden state: burn-in steps run without
// gradient, the rest build the loss graph. The loss is a sum over trained
// steps (not yet averaged).
ChunkLoss chunk_loss(const Policy& policy, const Chunk& chunk, const TrainerConfig& config);

// Per-step behavior logp recomputed by replaying the chunk (no gradient).
std::vector<double> replay_logp(const Policy& policy, const Chunk& chunk);

// Shuffled minibatches of chunks for config.epochs_per_iter epochs. Before a
// minibatch's update its approx-KL against the behavior policy is checked;
// above kl_max the iteration stops with no further parameter changes.
UpdateStats ppo_update(Policy& policy, Adam& optimizer, const std::vector<Chunk>& chunks, const TrainerConfig& config,
                       Rng& rng);

}  // namespace morphrl
