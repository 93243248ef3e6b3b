#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "morphrl/arch/policy.hpp"
#include "morphrl/domain/generate.hpp"
#include "morphrl/trainer/config.hpp"

namespace morphrl {

struct RunConfig {
  ArchKind arch = ArchKind::rmomo;
  std::uint64_t seed = 0;
  std::filesystem::path robot_dir = "robots";
  std::filesystem::path split_file = "robots/split.json";
  std::string train_set = "train";
  std::filesystem::path out_dir = "runs";
  std::size_t eval_episodes = 3;

  TrainerConfig trainer;
  ModelConfig model;

  GenSpec gen;
  SplitCounts counts{16, 4, 8};
  bool unique_topologies = true;

  std::vector<PerturbKind> perturb_kinds{std::begin(kAllPerturbKinds), std::end(kAllPerturbKinds)};
  std::size_t perturb_draws = 2;
  double perturb_strength = kDefaultPerturbStrength;
};

// Flat sectioned key=value text:
//   [run] arch, seed, robot_dir, split_file, train_set, out_dir, eval_episodes
//   [trainer] every TrainerConfig field, plus terrain and horizon
//   [model] d_model, ff_width, layers, heads, hyper_hidden, max_limbs, log_std_init
//   [sim] dt, omega_max, k_spring, g_slide, ctrl_cost, reset_noise, terrain_samples, lookahead_spacing
//   [robots] train, validation, test, unique_topologies, min_limbs, max_limbs, <range>_lo, <range>_hi
//   [perturb] kinds (comma separated), draws, strength
// Overrides are "section.key=value" and apply after the file. Relative paths
// resolve against the config file's directory. Unknown keys and bad values
// raise ConfigError naming the key.
RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
RunConfig parse_run_config(const std::string& text, const std::vector<std::string>& overrides = {},
                           const std::filesystem::path& base_dir = ".");

// Cross-field checks; also sets model.lookahead_width from the terrain.
void finalize_run_config(RunConfig& config);

std::string run_name(const RunConfig& config);

}  // namespace morphrl
