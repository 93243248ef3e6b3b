#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "morphrl/arch/policy.hpp"
#include "morphrl/domain/morphology.hpp"
#include "morphrl/trainer/config.hpp"

namespace morphrl {

struct StepRecord {
  ModularObservation obs;
  Array prev_action;  // env action of the previous step, zeros at t = 0
  Array action;       // raw Gaussian draw
  double logp = 0.0;
  double value = 0.0;
  double reward = 0.0;
  bool done = false;
};

struct Episode {
  std::size_t robot = 0;  // index into the robot list
  std::string robot_id;
  std::vector<StepRecord> steps;
  // Behavior bank held before the step at each chunk start (recurrent only).
  std::map<std::size_t, Array> hidden_snapshots;
  double episode_return = 0.0;
  double final_distance = 0.0;
  std::vector<double> advantages;
  std::vector<double> returns;
};

struct RolloutBuffer {
  std::vector<Episode> episodes;

  std::size_t total_steps() const;
  // Undiscounted return per robot index, averaged over that robot's episodes.
  std::map<std::size_t, double> mean_return_by_robot() const;
};

// One env per entry of env_robots, each with an independent random stream
// derived from (seed, iter, env index).
RolloutBuffer collect_rollouts(const Policy& policy, const std::vector<Morphology>& robots,
                               const std::vector<std::size_t>& env_robots, const TrainerConfig& config,
                               std::uint64_t seed, std::uint64_t iter);

// Round-robin env → robot assignment for one iteration.
std::vector<std::size_t> assign_envs(std::size_t num_robots, std::size_t num_envs, std::uint64_t iter);

// GAE per episode, then advantage normalization over all steps.
void compute_advantages(RolloutBuffer& buffer, const TrainerConfig& config);

}  // namespace morphrl
