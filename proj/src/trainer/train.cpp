#include "morphrl/trainer/train.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "morphrl/domain/io.hpp"
#include "morphrl/errors.hpp"
#include "morphrl/trainer/rollout.hpp"

namespace morphrl {

using nlohmann::json;

namespace {

template <class T>
void read_key(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for ") + key);
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

json model_config_to_json(const ModelConfig& c) {
  return json{{"arch", std::string(to_string(c.arch))},
              {"d_model", c.d_model},
              {"ff_width", c.ff_width},
              {"layers", c.layers},
              {"heads", c.heads},
              {"hyper_hidden", c.hyper_hidden},
              {"lookahead_width", c.lookahead_width},
              {"max_limbs", c.max_limbs},
              {"log_std_init", c.log_std_init}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  if (j.contains("arch")) c.arch = parse_arch_kind(j.at("arch").get<std::string>());
  read_key(j, "d_model", c.d_model);
  read_key(j, "ff_width", c.ff_width);
  read_key(j, "layers", c.layers);
  read_key(j, "heads", c.heads);
  read_key(j, "hyper_hidden", c.hyper_hidden);
  read_key(j, "lookahead_width", c.lookahead_width);
  read_key(j, "max_limbs", c.max_limbs);
  read_key(j, "log_std_init", c.log_std_init);
  validate_model_config(c);
  return c;
}

json trainer_config_to_json(const TrainerConfig& c) {
  return json{{"gamma", c.gamma},
              {"lam", c.lam},
              {"clip_eps", c.clip_eps},
              {"lr", c.lr},
              {"epochs_per_iter", c.epochs_per_iter},
              {"minibatch_chunks", c.minibatch_chunks},
              {"kl_max", c.kl_max},
              {"chunk_m", c.chunk_m},
              {"burn_in_l", c.burn_in_l},
              {"half_overlap", c.half_overlap},
              {"rollout_steps", c.rollout_steps},
              {"num_envs", c.num_envs},
              {"stored_hidden", c.stored_hidden},
              {"value_coef", c.value_coef},
              {"entropy_coef", c.entropy_coef},
              {"max_grad_norm", c.max_grad_norm},
              {"total_iters", c.total_iters},
              {"checkpoint_every", c.checkpoint_every},
              {"terrain", std::string(to_string(c.terrain))},
              {"horizon", c.sim.horizon},
              {"seed", c.seed}};
}

TrainerConfig trainer_config_from_json(const json& j) {
  TrainerConfig c;
  read_key(j, "gamma", c.gamma);
  read_key(j, "lam", c.lam);
  read_key(j, "clip_eps", c.clip_eps);
  read_key(j, "lr", c.lr);
  read_key(j, "epochs_per_iter", c.epochs_per_iter);
  read_key(j, "minibatch_chunks", c.minibatch_chunks);
  read_key(j, "kl_max", c.kl_max);
  read_key(j, "chunk_m", c.chunk_m);
  read_key(j, "burn_in_l", c.burn_in_l);
  read_key(j, "half_overlap", c.half_overlap);
  read_key(j, "rollout_steps", c.rollout_steps);
  read_key(j, "num_envs", c.num_envs);
  read_key(j, "stored_hidden", c.stored_hidden);
  read_key(j, "value_coef", c.value_coef);
  read_key(j, "entropy_coef", c.entropy_coef);
  read_key(j, "max_grad_norm", c.max_grad_norm);
  read_key(j, "total_iters", c.total_iters);
  read_key(j, "checkpoint_every", c.checkpoint_every);
  if (j.contains("terrain")) c.terrain = parse_terrain_kind(j.at("terrain").get<std::string>());
  read_key(j, "horizon", c.sim.horizon);
  read_key(j, "seed", c.seed);
  validate_trainer_config(c);
  return c;
}

std::string config_hash(const ModelConfig& model, const TrainerConfig& trainer) {
  const std::string text = json{{"model", model_config_to_json(model)}, {"trainer", trainer_config_to_json(trainer)}}.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::size_t lookahead_width_for(const TrainerConfig& config) {
  return provides_lookahead(config.terrain) ? config.sim.terrain_samples : 0;
}

std::string metrics_csv_header() {
  return "iter,robot_id,mean_return,policy_loss,value_loss,approx_kl,early_stopped,kl_max\n";
}

std::string metrics_csv_rows(const IterationLog& e, double kl_max) {
  std::ostringstream out;
  const std::string tail = "," + format_double(e.stats.policy_loss) + "," + format_double(e.stats.value_loss) + "," +
                           format_double(e.stats.approx_kl) + "," + (e.stats.early_stopped ? "1" : "0") + "," +
                           format_double(kl_max) + "\n";
  for (const auto& [id, ret] : e.robot_returns) out << e.iter << "," << id << "," << format_double(ret) << tail;
  out << e.iter << ",ALL," << format_double(e.mean_return) << tail;
  return out.str();
}

void save_checkpoint(const std::filesystem::path& stem, const Policy& policy, const CheckpointMeta& meta) {
  std::filesystem::path weights = stem;
  weights += ".mrl";
  std::filesystem::path sidecar = stem;
  sidecar += ".json";
  save_params(policy.params(), weights);
  write_json_file(sidecar, json{{"iter", meta.iter},
                                {"config_hash", meta.config_hash},
                                {"arch", std::string(to_string(meta.model.arch))},
                                {"model", model_config_to_json(meta.model)},
                                {"trainer", trainer_config_to_json(meta.trainer)}});
}

Policy load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta) {
  std::filesystem::path stem = path;
  if (stem.extension() == ".mrl" || stem.extension() == ".json") stem.replace_extension();
  std::filesystem::path weights = stem;
  weights += ".mrl";
  std::filesystem::path sidecar = stem;
  sidecar += ".json";
  const json j = read_json_file(sidecar);
  CheckpointMeta m;
  try {
    m.iter = j.at("iter").get<std::size_t>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.model = model_config_from_json(j.at("model"));
    if (j.contains("trainer")) m.trainer = trainer_config_from_json(j.at("trainer"));
    if (j.at("arch").get<std::string>() != to_string(m.model.arch)) {
      throw InvalidInput("checkpoint sidecar arch disagrees with its model section");
    }
  } catch (const json::exception& e) {
    throw InvalidInput("malformed checkpoint sidecar " + sidecar.string() + ": " + e.what());
  }
  Policy policy(m.model, load_params(weights));
  if (meta) *meta = std::move(m);
  return policy;
}

TrainResult train(const TrainerConfig& config, const ModelConfig& model, const std::vector<Morphology>& robots,
                  const std::optional<std::filesystem::path>& out_dir) {
  validate_trainer_config(config);
  validate_model_config(model);
  if (robots.empty()) throw InvalidInput("train: empty robot set");
  if (model.lookahead_width != lookahead_width_for(config)) {
    throw ConfigError("model.lookahead_width must be " + std::to_string(lookahead_width_for(config)) + " on " +
                      std::string(to_string(config.terrain)) + " terrain");
  }
  for (const auto& r : robots) validate_morphology(r, model.max_limbs);

  Policy policy(model, config.seed);
  Adam optimizer(policy.params(), AdamConfig{.lr = config.lr, .max_grad_norm = config.max_grad_norm});
  std::seed_seq update_seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                           0x5eedu};
  Rng update_rng(update_seq);
  const std::string hash = config_hash(model, config);

  std::ofstream metrics;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    metrics.open(*out_dir / "metrics.csv", std::ios::trunc);
    if (!metrics) throw IoError("cannot write " + (*out_dir / "metrics.csv").string());
    metrics << metrics_csv_header();
  }
  const auto checkpoint = [&](std::size_t iter, const std::string& name) {
    if (!out_dir) return;
    save_checkpoint(*out_dir / name, policy, CheckpointMeta{iter, hash, model, config});
  };

  std::vector<IterationLog> log;
  for (std::size_t iter = 0; iter < config.total_iters; ++iter) {
    const auto envs = assign_envs(robots.size(), config.num_envs, iter);
    RolloutBuffer buffer = collect_rollouts(policy, robots, envs, config, config.seed, iter);
    compute_advantages(buffer, config);
    const auto chunks = make_chunks(buffer, config.chunk_m, config.burn_in_l, config.stored_hidden, chunk_stride(config));

    IterationLog entry;
    entry.iter = iter;
    double total = 0.0;
    for (const auto& [robot, ret] : buffer.mean_return_by_robot()) {
      entry.robot_returns[robots[robot].id] = ret;
      total += ret;
    }
    entry.mean_return = total / static_cast<double>(entry.robot_returns.size());
    entry.stats = ppo_update(policy, optimizer, chunks, config, update_rng);
    if (metrics.is_open()) {
      metrics << metrics_csv_rows(entry, config.kl_max);
      metrics.flush();
    }
    log.push_back(std::move(entry));
    if (config.checkpoint_every > 0 && (iter + 1) % config.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "checkpoint_%06zu", iter + 1);
      checkpoint(iter + 1, name);
    }
  }
  checkpoint(config.total_iters, "final");
  return TrainResult{std::move(log), std::move(policy)};
}

}  // namespace morphrl
