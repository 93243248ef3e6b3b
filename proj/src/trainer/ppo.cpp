#include "morphrl/trainer/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "morphrl/errors.hpp"

namespace morphrl {

namespace {

HiddenStateBank initial_bank_for(const Policy& policy, const Chunk& chunk) {
  const std::size_t slots = chunk.step(0).obs.slots();
  if (chunk.initial_hidden.empty()) return policy.initial_bank(slots);
  return HiddenStateBank{constant(chunk.initial_hidden)};
}

std::size_t valid_count(const Mask& valid) {
  return static_cast<std::size_t>(std::count_if(valid.begin(), valid.end(), [](auto v) { return v != 0; }));
}

}  // namespace

ChunkLoss chunk_loss(const Policy& policy, const Chunk& chunk, const TrainerConfig& config) {
  if (chunk.valid_len == 0 || chunk.burn_in > chunk.valid_len) throw InvalidInput("malformed chunk");
  const double half_log_2pi_e = 0.5 + 0.5 * std::log(2.0 * std::numbers::pi);
  const ContextCache cache = policy.prepare(chunk.step(0).obs);
  HiddenStateBank bank = initial_bank_for(policy, chunk);
  if (policy.recurrent()) {
    NoGradGuard no_grad;
    for (std::size_t i = 0; i < chunk.burn_in; ++i) {
      const StepRecord& s = chunk.step(i);
      bank = *policy.step(cache, s.obs, s.prev_action, &bank).new_hidden;
    }
    // Burn-in outputs are constants; gradients start at the boundary.
    bank = HiddenStateBank{constant(bank.value())};
  }
  ChunkLoss out;
  std::vector<Var> terms;
  terms.reserve(chunk.trained_steps());
  for (std::size_t i = chunk.burn_in; i < chunk.valid_len; ++i) {
    const StepRecord& s = chunk.step(i);
    PolicyOutput o = policy.step(cache, s.obs, s.prev_action, &bank);
    if (o.new_hidden) bank = std::move(*o.new_hidden);
    const double adv = chunk.episode->advantages.at(chunk.start_t + i);
    const double ret = chunk.episode->returns.at(chunk.start_t + i);
    const Var logp = gaussian_logp(o.mu, o.log_std, s.action, s.obs.valid);
    const Var ratio = exp(add_scalar(logp, -s.logp));
    const Var surrogate = minimum(scale(ratio, adv), scale(clamp(ratio, 1.0 - config.clip_eps, 1.0 + config.clip_eps), adv));
    const Var value_err = square(add_scalar(o.value, -ret));
    const Var entropy = add_scalar(masked_sum(o.log_std, s.obs.valid), half_log_2pi_e * double(valid_count(s.obs.valid)));
    Var term = add(scale(surrogate, -1.0), scale(value_err, config.value_coef));
    if (config.entropy_coef != 0.0) term = sub(term, scale(entropy, config.entropy_coef));
    terms.push_back(std::move(term));
    out.policy_loss -= surrogate.value().item();
    out.value_loss += value_err.value().item();
    out.entropy += entropy.value().item();
    out.kl_sum += s.logp - logp.value().item();
    ++out.steps;
  }
  out.loss = terms.empty() ? constant(Array::scalar(0.0)) : sum_scalars(terms);
  return out;
}

std::vector<double> replay_logp(const Policy& policy, const Chunk& chunk) {
  NoGradGuard no_grad;
  const ContextCache cache = policy.prepare(chunk.step(0).obs);
  HiddenStateBank bank = initial_bank_for(policy, chunk);
  std::vector<double> logps;
  for (std::size_t i = 0; i < chunk.valid_len; ++i) {
    const StepRecord& s = chunk.step(i);
    PolicyOutput o = policy.step(cache, s.obs, s.prev_action, &bank);
    if (o.new_hidden) bank = std::move(*o.new_hidden);
    logps.push_back(gaussian_logp(o.mu, o.log_std, s.action, s.obs.valid).value().item());
  }
  return logps;
}

UpdateStats ppo_update(Policy& policy, Adam& optimizer, const std::vector<Chunk>& chunks, const TrainerConfig& config,
                       Rng& rng) {
  if (chunks.empty()) throw InvalidInput("ppo_update: empty chunk list");
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < chunks.size(); ++i)
    if (chunks[i].trained_steps() > 0) order.push_back(i);
  if (order.empty()) throw InvalidInput("ppo_update: every chunk is pure burn-in");

  UpdateStats stats;
  double kl_total = 0.0;
  std::size_t checked = 0;
  const auto finish = [&] {
    if (stats.minibatches > 0) {
      const double n = static_cast<double>(stats.minibatches);
      stats.policy_loss /= n;
      stats.value_loss /= n;
      stats.entropy /= n;
    }
    stats.approx_kl = checked > 0 ? kl_total / static_cast<double>(checked) : 0.0;
    return stats;
  };
  for (std::size_t epoch = 0; epoch < config.epochs_per_iter; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < order.size(); b += config.minibatch_chunks) {
      const std::size_t e = std::min(order.size(), b + config.minibatch_chunks);
      std::vector<Var> losses;
      ChunkLoss totals;
      for (std::size_t k = b; k < e; ++k) {
        ChunkLoss cl = chunk_loss(policy, chunks[order[k]], config);
        losses.push_back(cl.loss);
        totals.policy_loss += cl.policy_loss;
        totals.value_loss += cl.value_loss;
        totals.entropy += cl.entropy;
        totals.kl_sum += cl.kl_sum;
        totals.steps += cl.steps;
      }
      const double n = static_cast<double>(totals.steps);
      const double kl = totals.kl_sum / n;
      kl_total += kl;
      ++checked;
      if (!(kl <= config.kl_max)) {
        stats.early_stopped = true;
        return finish();
      }
      const Var loss = scale(sum_scalars(losses), 1.0 / n);
      optimizer.step(policy.params(), backward(loss, policy.params()));
      stats.policy_loss += totals.policy_loss / n;
      stats.value_loss += totals.value_loss / n;
      stats.entropy += totals.entropy / n;
      ++stats.minibatches;
    }
  }
  return finish();
}

}  // namespace morphrl
