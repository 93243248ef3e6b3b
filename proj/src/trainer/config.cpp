#include "morphrl/trainer/config.hpp"

#include <string>

#include "morphrl/errors.hpp"

namespace morphrl {

namespace {
void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}
}  // namespace

void validate_trainer_config(const TrainerConfig& c) {
  require(c.gamma > 0.0 && c.gamma <= 1.0, "trainer.gamma must lie in (0, 1]");
  require(c.lam >= 0.0 && c.lam <= 1.0, "trainer.lam must lie in [0, 1]");
  require(c.clip_eps > 0.0, "trainer.clip_eps must be positive");
  require(c.lr >= 0.0, "trainer.lr must be non-negative");
  require(c.epochs_per_iter >= 1, "trainer.epochs_per_iter must be at least 1");
  require(c.minibatch_chunks >= 1, "trainer.minibatch_chunks must be at least 1");
  require(c.kl_max > 0.0, "trainer.kl_max must be positive");
  require(c.chunk_m >= 1, "trainer.chunk_m must be at least 1");
  require(c.burn_in_l < c.chunk_m, "trainer.burn_in_l must be smaller than trainer.chunk_m");
  require(!c.half_overlap || (c.chunk_m >= 2 && c.burn_in_l <= c.chunk_m / 2),
          "trainer.half_overlap needs trainer.burn_in_l <= trainer.chunk_m / 2");
  require(c.sim.horizon >= 1, "trainer.horizon must be at least 1");
  require(c.rollout_steps >= 1 && c.rollout_steps % static_cast<std::size_t>(c.sim.horizon) == 0,
          "trainer.rollout_steps must be a positive multiple of trainer.horizon");
  require(c.value_coef >= 0.0, "trainer.value_coef must be non-negative");
  require(c.entropy_coef >= 0.0, "trainer.entropy_coef must be non-negative");
  require(c.total_iters >= 1, "trainer.total_iters must be at least 1");
  require(c.sim.dt > 0.0, "sim.dt must be positive");
}

std::size_t chunk_stride(const TrainerConfig& c) {
  return c.half_overlap ? c.chunk_m / 2 : c.chunk_m - c.burn_in_l;
}

}  // namespace morphrl
