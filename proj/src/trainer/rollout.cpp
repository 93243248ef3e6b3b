#include "morphrl/trainer/rollout.hpp"

#include <random>

#include "morphrl/errors.hpp"
#include "morphrl/sim/simulator.hpp"
#include "morphrl/trainer/gae.hpp"
#include "morphrl/trainer/parallel.hpp"

namespace morphrl {

std::size_t RolloutBuffer::total_steps() const {
  std::size_t n = 0;
  for (const auto& ep : episodes) n += ep.steps.size();
  return n;
}

std::map<std::size_t, double> RolloutBuffer::mean_return_by_robot() const {
  std::map<std::size_t, std::pair<double, std::size_t>> acc;
  for (const auto& ep : episodes) {
    auto& [total, count] = acc[ep.robot];
    total += ep.episode_return;
    ++count;
  }
  std::map<std::size_t, double> out;
  for (const auto& [robot, tc] : acc) out[robot] = tc.first / static_cast<double>(tc.second);
  return out;
}

std::vector<std::size_t> assign_envs(std::size_t num_robots, std::size_t num_envs, std::uint64_t iter) {
  if (num_robots == 0) throw InvalidInput("no robots to assign");
  if (num_envs == 0) num_envs = num_robots;
  std::vector<std::size_t> out(num_envs);
  for (std::size_t e = 0; e < num_envs; ++e) out[e] = (iter * num_envs + e) % num_robots;
  return out;
}

namespace {

std::vector<Episode> run_env(const Policy& policy, const Morphology& robot, std::size_t robot_index,
                             const TrainerConfig& config, Rng& rng) {
  NoGradGuard no_grad;
  const SimConfig& sim = config.sim;
  const std::size_t horizon = static_cast<std::size_t>(sim.horizon);
  const std::size_t stride = chunk_stride(config);
  const std::size_t n = robot.limbs.size();
  std::vector<Episode> episodes(config.rollout_steps / horizon);
  for (Episode& ep : episodes) {
    ep.robot = robot_index;
    ep.robot_id = robot.id;
    ep.steps.reserve(horizon);
    ResetResult r = reset(robot, config.terrain, rng, sim);
    ModularObservation obs = std::move(r.observation);
    const ContextCache cache = policy.prepare(obs);
    HiddenStateBank bank = policy.initial_bank(n);
    Array prev(Shape{n});
    for (std::size_t t = 0; t < horizon; ++t) {
      if (policy.recurrent() && t % stride == 0) ep.hidden_snapshots.emplace(t, bank.value());
      PolicyOutput out = policy.step(cache, obs, prev, &bank);
      SampledAction a = sample_action(out, obs.valid, rng);
      StepResult sr = step(r.state, robot, r.terrain, a.env_action.data(), sim);
      ep.episode_return += sr.reward;
      ep.final_distance = sr.distance;
      double value = out.value.value().item();
      ep.steps.push_back(StepRecord{std::move(obs), prev, std::move(a.raw), a.logp, value, sr.reward, sr.done});
      if (out.new_hidden) bank = std::move(*out.new_hidden);
      prev = std::move(a.env_action);
      obs = std::move(sr.observation);
      if (sr.done) break;
    }
  }
  return episodes;
}

}  // namespace

RolloutBuffer collect_rollouts(const Policy& policy, const std::vector<Morphology>& robots,
                               const std::vector<std::size_t>& env_robots, const TrainerConfig& config,
                               std::uint64_t seed, std::uint64_t iter) {
  if (env_robots.empty()) throw InvalidInput("collect_rollouts: no environments");
  for (std::size_t r : env_robots) {
    if (r >= robots.size()) {
      throw InvalidInput("collect_rollouts: env refers to robot " + std::to_string(r) + " of " +
                         std::to_string(robots.size()));
    }
    if (robots[r].limbs.size() > policy.config().max_limbs) {
      throw InvalidInput("robot " + robots[r].id + " has more limbs than the policy supports");
    }
  }
  std::vector<std::vector<Episode>> per_env(env_robots.size());
  parallel_for(env_robots.size(), [&](std::size_t e) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(iter), static_cast<std::uint32_t>(e)};
    Rng rng(seq);
    per_env[e] = run_env(policy, robots[env_robots[e]], env_robots[e], config, rng);
  });
  RolloutBuffer buffer;
  for (auto& eps : per_env)
    for (auto& ep : eps) buffer.episodes.push_back(std::move(ep));
  return buffer;
}

void compute_advantages(RolloutBuffer& buffer, const TrainerConfig& config) {
  std::vector<double> all;
  for (Episode& ep : buffer.episodes) {
    const std::size_t n = ep.steps.size();
    std::vector<double> rewards(n), values(n);
    std::unique_ptr<bool[]> dones(new bool[n]);
    for (std::size_t t = 0; t < n; ++t) {
      rewards[t] = ep.steps[t].reward;
      values[t] = ep.steps[t].value;
      dones[t] = ep.steps[t].done;
    }
    GaeResult g = compute_gae(rewards, values, std::span<const bool>(dones.get(), n), config.gamma, config.lam);
    ep.advantages = std::move(g.advantages);
    ep.returns = std::move(g.returns);
    all.insert(all.end(), ep.advantages.begin(), ep.advantages.end());
  }
  normalize(all);
  std::size_t k = 0;
  for (Episode& ep : buffer.episodes)
    for (double& a : ep.advantages) a = all[k++];
}

}  // namespace morphrl
