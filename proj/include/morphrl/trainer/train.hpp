#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphrl/arch/policy.hpp"
#include "morphrl/trainer/config.hpp"
#include "morphrl/trainer/ppo.hpp"

namespace morphrl {

struct IterationLog {
  std::size_t iter = 0;
  std::map<std::string, double> robot_returns;
  double mean_return = 0.0;  // (1/K) Σ_k return of robot k
  UpdateStats stats;
};

struct TrainResult {
  std::vector<IterationLog> log;
  Policy policy;
};

struct CheckpointMeta {
  std::size_t iter = 0;
  std::string config_hash;
  ModelConfig model;
  TrainerConfig trainer;
};

// Writes metrics.csv and checkpoints under out_dir when it is set.
TrainResult train(const TrainerConfig& config, const ModelConfig& model, const std::vector<Morphology>& robots,
                  const std::optional<std::filesystem::path>& out_dir = std::nullopt);

// Model lookahead width matching the terrain kind.
std::size_t lookahead_width_for(const TrainerConfig& config);

std::string metrics_csv_header();
std::string metrics_csv_rows(const IterationLog& entry, double kl_max);

// "<stem>.mrl" plus "<stem>.json" sidecar.
void save_checkpoint(const std::filesystem::path& stem, const Policy& policy, const CheckpointMeta& meta);
// Accepts either the .mrl path or the stem.
Policy load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

nlohmann::json model_config_to_json(const ModelConfig& c);
// Missing keys keep defaults; the result is validated.
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json trainer_config_to_json(const TrainerConfig& c);
TrainerConfig trainer_config_from_json(const nlohmann::json& j);

// FNV-1a of the canonical JSON dump of both configs, as 16 hex digits.
std::string config_hash(const ModelConfig& model, const TrainerConfig& trainer);

}  // namespace morphrl
