#pragma once

// Shared fixtures for the unit and acceptance suites: random data, robot
// builders and independent reference implementations.

#include <cmath>
#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "morphrl/arch/policy.hpp"
#include "morphrl/domain/generate.hpp"
#include "morphrl/domain/observation.hpp"
#include "morphrl/numeric/kernels.hpp"
#include "morphrl/numeric/params.hpp"
#include "morphrl/sim/simulator.hpp"
#include "morphrl/trainer/chunks.hpp"
#include "morphrl/trainer/ppo.hpp"

namespace morphrl::testing {

inline Array random_array(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Array a(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : a.data()) v = u(rng);
  return a;
}

inline Mask random_mask(Rng& rng, std::size_t n, bool at_least_one = true) {
  Mask m(n);
  std::bernoulli_distribution b(0.7);
  for (auto& v : m) v = b(rng) ? 1 : 0;
  if (at_least_one) m[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)] = 1;
  return m;
}

inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline Morphology random_robot(Rng& rng, std::size_t min_limbs, std::size_t max_limbs, const std::string& id = "r") {
  GenSpec spec;
  spec.min_limbs = static_cast<int>(min_limbs);
  spec.max_limbs = static_cast<int>(max_limbs);
  return sample_morphology(rng, spec, id);
}

inline std::vector<double> random_state_values(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& x : v) x = u(rng);
  return v;
}

// Observation with random underlying state (and lookahead when width > 0).
inline ModularObservation random_observation(Rng& rng, const Morphology& m, std::size_t lookahead_width = 0,
                                             std::size_t pad_to = 0) {
  const std::size_t n = m.limbs.size();
  UnderlyingState s{random_state_values(rng, n), random_state_values(rng, n, 3.0), random_state_values(rng, n)};
  const auto look = random_state_values(rng, lookahead_width, 0.3);
  return observe(s, m, look, pad_to);
}

// Small widths keep the finite-difference sweep over every coordinate cheap.
inline ModelConfig small_model(ArchKind arch, std::size_t lookahead = 0) {
  ModelConfig c;
  c.arch = arch;
  c.d_model = 4;
  c.ff_width = 6;
  c.layers = 2;
  c.heads = 2;
  c.hyper_hidden = 5;
  c.lookahead_width = lookahead;
  c.max_limbs = kDefaultMaxLimbs;
  return c;
}

inline constexpr ArchKind kAllArchs[] = {ArchKind::metamorph, ArchKind::modumorph, ArchKind::rmemo, ArchKind::rmomo};

using LossFn = std::function<Var(const ParamStore&)>;

struct KernelCase {
  std::string name;
  // Registers the kernel's differentiable inputs in ps and returns a scalar
  // loss builder that reads them back.
  std::function<LossFn(Rng&, ParamStore&)> setup;
};

inline std::vector<KernelCase> kernel_cases() {
  using P = const ParamStore&;
  std::vector<KernelCase> cases;
  auto elementwise = [&](std::string name, std::function<Var(const Var&, const Var&)> op, double lo, double hi) {
    cases.push_back({name, [op, lo, hi](Rng& rng, ParamStore& ps) -> LossFn {
                       const std::size_t r = uniform_index(rng, 1, 8), c = uniform_index(rng, 1, 16);
                       ps.add("a", random_array(rng, {r, c}, lo, hi));
                       ps.add("b", random_array(rng, {r, c}, lo, hi));
                       const Array w = random_array(rng, {r, c}, 0.5, 1.5);
                       return [op, w](P p) { return weighted_sum(op(p.get("a"), p.get("b")), w); };
                     }});
  };
  auto unary = [&](std::string name, std::function<Var(const Var&)> op, double lo, double hi) {
    cases.push_back({name, [op, lo, hi](Rng& rng, ParamStore& ps) -> LossFn {
                       const std::size_t r = uniform_index(rng, 1, 8), c = uniform_index(rng, 1, 16);
                       ps.add("a", random_array(rng, {r, c}, lo, hi));
                       const std::uint64_t wseed = rng();
                       return [op, wseed](P p) {
                         const Var y = op(p.get("a"));
                         Rng wr(wseed);
                         return weighted_sum(y, random_array(wr, y.shape(), 0.5, 1.5));
                       };
                     }});
  };
  elementwise("add", [](const Var& a, const Var& b) { return add(a, b); }, -1, 1);
  elementwise("sub", [](const Var& a, const Var& b) { return sub(a, b); }, -1, 1);
  elementwise("mul", [](const Var& a, const Var& b) { return mul(a, b); }, -1, 1);
  elementwise("minimum", [](const Var& a, const Var& b) { return minimum(a, b); }, -1, 1);
  unary("scale", [](const Var& a) { return scale(a, -1.7); }, -1, 1);
  unary("add_scalar", [](const Var& a) { return add_scalar(a, 0.3); }, -1, 1);
  unary("tanh", [](const Var& a) { return tanh(a); }, -2, 2);
  unary("sigmoid", [](const Var& a) { return sigmoid(a); }, -3, 3);
  unary("exp", [](const Var& a) { return exp(a); }, -1, 1);
  unary("square", [](const Var& a) { return square(a); }, -1, 1);
  unary("clamp", [](const Var& a) { return clamp(a, -0.5, 0.5); }, -1, 1);
  unary("transpose", [](const Var& a) { return transpose(a); }, -1, 1);
  unary("softmax_rows", [](const Var& a) { return softmax_rows(a); }, -2, 2);
  unary("slice_cols", [](const Var& a) { return slice_cols(a, 0, a.shape()[1] > 1 ? a.shape()[1] - 1 : 1); }, -1, 1);
  unary("reshape", [](const Var& a) { return reshape(a, Shape{a.size()}); }, -1, 1);
  unary("slice", [](const Var& a) { return slice(reshape(a, Shape{a.size()}), a.size() / 2, a.size() - a.size() / 2); }, -1, 1);

  cases.push_back({"add_rowvec", [](Rng& rng, ParamStore& ps) -> LossFn {
                     const std::size_t r = uniform_index(rng, 1, 8), c = uniform_index(rng, 1, 16);
                     ps.add("x", random_array(rng, {r, c}));
                     ps.add("v", random_array(rng, {c}));
                     const Array w = random_array(rng, {r, c}, 0.5, 1.5);
                     return [w](P p) { return weighted_sum(add_rowvec(p.get("x"), p.get("v")), w); };
                   }});
  cases.push_back({"matmul", [](Rng& rng, ParamStore& ps) -> LossFn {
                     const std::size_t n = uniform_index(rng, 1, 8), k = uniform_index(rng, 1, 16),
                                       m = uniform_index(rng, 1, 8);
                     ps.add("a", random_array(rng, {n, k}));
                     ps.add("b", random_array(rng, {k, m}));
                     const Array w = random_array(rng, {n, m}, 0.5, 1.5);
                     return [w](P p) { return weighted_sum(matmul(p.get("a"), p.get("b")), w); };
                   }});
  cases.push_back({"linear", [](Rng& rng, ParamStore& ps) -> LossFn {
                     const std::size_t n = uniform_index(rng, 1, 8), in = uniform_index(rng, 1, 16),
                                       out = uniform_index(rng, 1, 8);
                     ps.add("x", random_array(rng, {n, in}));
                     ps.add("w", random_array(rng, {in, out}));
                     ps.add("b", random_array(rng, {out}));
                     const Array w = random_array(rng, {n, out}, 0.5, 1.5);
                     return [w](P p) { return weighted_sum(linear(p.get("x"), p.get("w"), p.get("b")), w); };
                   }});
  cases.push_back({"gen_linear", [](Rng& rng, ParamStore& ps) -> LossFn {
                     const std::size_t n = uniform_index(rng, 1, 8), in = uniform_index(rng, 1, 4),
                                       out = uniform_index(rng, 1, 4);
                     ps.add("x", random_array(rng, {n, in}));
                     ps.add("w", random_array(rng, {n, in * out}));
                     ps.add("b", random_array(rng, {n, out}));
                     const Array w = random_array(rng, {n, out}, 0.5, 1.5);
                     return [w](P p) { return weighted_sum(gen_linear(p.get("x"), p.get("w"), p.get("b")), w); };
                   }});
  cases.push_back({"layer_norm", [](Rng& rng, ParamStore& ps) -> LossFn {
                     const std::size_t n = uniform_index(rng, 1, 8), d = uniform_index(rng, 2, 16);
                     ps.add("x", random_array(rng, {n, d}, -2, 2));
                     ps.add("g", random_array(rng, {d}, 0.5, 1.5));
                     ps.add("b", random_array(rng, {d}));
                     const Array w = random_array(rng, {n, d}, 0.5, 1.5);
                     return [w](P p) { return weighted_sum(layer_norm(p.get("x"), p.get("g"), p.get("b")), w); };
                   }});
  cases.push_back({"masked_attention", [](Rng& rng, ParamStore& ps) -> LossFn {
                     const std::size_t n = uniform_index(rng, 1, 8);
                     const int heads = static_cast<int>(uniform_index(rng, 1, 2));
                     const std::size_t d = static_cast<std::size_t>(heads) * uniform_index(rng, 1, 4);
                     ps.add("x", random_array(rng, {n, d}));
                     ps.add("wq", random_array(rng, {d, d}));
                     ps.add("wk", random_array(rng, {d, d}));
                     ps.add("wv", random_array(rng, {d, d}));
                     const Mask mask = validity_attention_mask(random_mask(rng, n));
                     const Array w = random_array(rng, {n, d}, 0.5, 1.5);
                     return [w, mask, heads](P p) {
                       const Var& x = p.get("x");
                       return weighted_sum(
                           masked_attention(x, x, x, p.get("wq"), p.get("wk"), p.get("wv"), mask, heads).out, w);
                     };
                   }});
  cases.push_back({"attention_core", [](Rng& rng, ParamStore& ps) -> LossFn {
                     const std::size_t n = uniform_index(rng, 1, 8), d = 2 * uniform_index(rng, 1, 4);
                     ps.add("q", random_array(rng, {n, d}));
                     ps.add("k", random_array(rng, {n, d}));
                     ps.add("v", random_array(rng, {n, d}));
                     const Mask mask = validity_attention_mask(random_mask(rng, n));
                     const Array w = random_array(rng, {n, d}, 0.5, 1.5);
                     return [w, mask](P p) { return weighted_sum(attention_core(p.get("q"), p.get("k"), p.get("v"), mask, 2).out, w); };
                   }});
  cases.push_back({"concat_cols", [](Rng& rng, ParamStore& ps) -> LossFn {
                     const std::size_t n = uniform_index(rng, 1, 8);
                     ps.add("a", random_array(rng, {n, uniform_index(rng, 1, 8)}));
                     ps.add("b", random_array(rng, {n, uniform_index(rng, 1, 8)}));
                     const std::size_t c = ps.get("a").shape()[1] + ps.get("b").shape()[1];
                     const Array w = random_array(rng, {n, c}, 0.5, 1.5);
                     return [w](P p) { return weighted_sum(concat_cols({p.get("a"), p.get("b")}), w); };
                   }});
  cases.push_back({"broadcast_rows", [](Rng& rng, ParamStore& ps) -> LossFn {
                     const std::size_t n = uniform_index(rng, 1, 8), c = uniform_index(rng, 1, 16);
                     ps.add("v", random_array(rng, {c}));
                     const Array w = random_array(rng, {n, c}, 0.5, 1.5);
                     return [w, n](P p) { return weighted_sum(broadcast_rows(p.get("v"), n), w); };
                   }});
  cases.push_back({"sum_mean", [](Rng& rng, ParamStore& ps) -> LossFn {
                     const std::size_t n = uniform_index(rng, 1, 8), c = uniform_index(rng, 1, 16);
                     ps.add("a", random_array(rng, {n, c}));
                     return [](P p) {
                       return sum_scalars({sum(square(p.get("a"))), scale(mean(exp(p.get("a"))), 2.0)});
                     };
                   }});
  cases.push_back({"masked_sum", [](Rng& rng, ParamStore& ps) -> LossFn {
                     const std::size_t n = uniform_index(rng, 1, 16);
                     ps.add("a", random_array(rng, {n}));
                     const Mask m = random_mask(rng, n);
                     return [m](P p) { return masked_sum(square(add_scalar(p.get("a"), 1.5)), m); };
                   }});
  cases.push_back({"masked_mean_rows", [](Rng& rng, ParamStore& ps) -> LossFn {
                     const std::size_t n = uniform_index(rng, 1, 8), c = uniform_index(rng, 1, 16);
                     ps.add("a", random_array(rng, {n, c}));
                     const Mask m = random_mask(rng, n);
                     const Array w = random_array(rng, {c}, 0.5, 1.5);
                     return [m, w](P p) { return weighted_sum(masked_mean_rows(p.get("a"), m), w); };
                   }});
  cases.push_back({"gaussian_logp", [](Rng& rng, ParamStore& ps) -> LossFn {
                     const std::size_t n = uniform_index(rng, 1, 12);
                     ps.add("mu", random_array(rng, {n}));
                     ps.add("log_std", random_array(rng, {n}, -1.0, 0.5));
                     const Array action = random_array(rng, {n}, -1.5, 1.5);
                     const Mask m = random_mask(rng, n);
                     return [action, m](P p) { return gaussian_logp(p.get("mu"), p.get("log_std"), action, m); };
                   }});
  cases.push_back({"gru_cell_3_steps", [](Rng& rng, ParamStore& ps) -> LossFn {
                     const std::size_t n = uniform_index(rng, 1, 8), in = uniform_index(rng, 1, 6),
                                       h = uniform_index(rng, 1, 6);
                     ps.add("w_ih", random_array(rng, {in, 3 * h}));
                     ps.add("w_hh", random_array(rng, {h, 3 * h}));
                     ps.add("b_ih", random_array(rng, {3 * h}));
                     ps.add("b_hh", random_array(rng, {3 * h}));
                     ps.add("h0", random_array(rng, {n, h}));
                     std::vector<Array> xs;
                     for (int t = 0; t < 3; ++t) xs.push_back(random_array(rng, {n, in}));
                     const Array w = random_array(rng, {n, h}, 0.5, 1.5);
                     return [xs, w](P p) {
                       GruWeights g{p.get("w_ih"), p.get("w_hh"), p.get("b_ih"), p.get("b_hh")};
                       Var h = p.get("h0");
                       for (const auto& x : xs) h = gru_cell(constant(x), h, g);
                       return weighted_sum(h, w);
                     };
                   }});
  return cases;
}

// Scalar objective touching every head of a policy: random projections of
// mu, value and the action log-density over consecutive observations, with
// the recurrent state carried between them.
inline std::function<Var()> policy_objective(const Policy& policy, const std::vector<ModularObservation>& obs_seq,
                                             Rng& rng) {
  std::vector<Array> prev_actions, mu_w, actions;
  std::vector<double> value_w;
  const std::size_t s = obs_seq.front().slots();
  for (std::size_t t = 0; t < obs_seq.size(); ++t) {
    prev_actions.push_back(t == 0 ? Array(Shape{s}) : random_array(rng, {s}));
    mu_w.push_back(random_array(rng, {s}, 0.5, 1.5));
    actions.push_back(random_array(rng, {s}));
    value_w.push_back(std::uniform_real_distribution<double>(0.5, 1.5)(rng));
  }
  return [&policy, obs_seq, prev_actions, mu_w, actions, value_w] {
    const ContextCache cache = policy.prepare(obs_seq.front());
    HiddenStateBank bank = policy.initial_bank(obs_seq.front().slots());
    std::vector<Var> terms;
    for (std::size_t t = 0; t < obs_seq.size(); ++t) {
      PolicyOutput out = policy.step(cache, obs_seq[t], prev_actions[t], &bank);
      terms.push_back(weighted_sum(out.mu, mu_w[t]));
      terms.push_back(scale(out.value, value_w[t]));
      terms.push_back(scale(gaussian_logp(out.mu, out.log_std, actions[t], obs_seq[t].valid), 0.1));
      if (out.new_hidden) bank = *out.new_hidden;
    }
    return sum_scalars(terms);
  };
}

inline std::vector<ModularObservation> random_sequence(Rng& rng, const Morphology& m, std::size_t steps,
                                                       std::size_t lookahead_width = 0) {
  std::vector<ModularObservation> seq;
  for (std::size_t t = 0; t < steps; ++t) seq.push_back(random_observation(rng, m, lookahead_width));
  return seq;
}

struct Rollout {
  std::vector<Array> mu;
  std::vector<double> value;
};

// Feeds fixed observations and previous actions through a policy, carrying
// the hidden bank.
inline Rollout run_policy(const Policy& p, const std::vector<ModularObservation>& seq, const std::vector<Array>& prev) {
  NoGradGuard no_grad;
  const ContextCache cache = p.prepare(seq.front());
  HiddenStateBank bank = p.initial_bank(seq.front().slots());
  Rollout r;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const PolicyOutput out = p.step(cache, seq[t], prev[t], &bank);
    r.mu.push_back(out.mu.value());
    r.value.push_back(out.value.value().item());
    if (out.new_hidden) bank = *out.new_hidden;
  }
  return r;
}

struct SymmetryGap {
  double permutation = 0.0;
  double padding = 0.0;
};

// Largest output deviation over a 3-step rollout when the slots are randomly
// permuted, and when the robot is padded to 12 slots.
inline SymmetryGap symmetry_gap(const Policy& p, const Morphology& m, Rng& rng) {
  const std::size_t n = m.limbs.size(), padded = 12;
  const auto seq = random_sequence(rng, m, 3);
  const std::vector<Array> prev = {Array(Shape{n}), random_array(rng, {n}), random_array(rng, {n})};
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<ModularObservation> pseq, padseq;
  std::vector<Array> pprev, padprev;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    pseq.push_back(permute_observation(seq[t], perm));
    padseq.push_back(pad_observation(seq[t], padded));
    Array pa(Shape{n}), pd(Shape{padded});
    for (std::size_t i = 0; i < n; ++i) {
      pa[i] = prev[t][perm[i]];
      pd[i] = prev[t][i];
    }
    pprev.push_back(pa);
    padprev.push_back(pd);
  }
  const Rollout base = run_policy(p, seq, prev), by_perm = run_policy(p, pseq, pprev), by_pad = run_policy(p, padseq, padprev);
  SymmetryGap gap;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      gap.permutation = std::max(gap.permutation, std::abs(by_perm.mu[t][i] - base.mu[t][perm[i]]));
      gap.padding = std::max(gap.padding, std::abs(by_pad.mu[t][i] - base.mu[t][i]));
    }
    gap.permutation = std::max(gap.permutation, std::abs(by_perm.value[t] - base.value[t]));
    gap.padding = std::max(gap.padding, std::abs(by_pad.value[t] - base.value[t]));
  }
  return gap;
}

// Largest entry change of any attention map between t = 0 and t = steps on
// an episode driven by the policy's own sampled actions.
inline double attention_drift(const Policy& p, const Morphology& m, Rng& rng, int steps) {
  NoGradGuard no_grad;
  ResetResult r = reset(m, TerrainKind::flat, rng);
  const ContextCache cache = p.prepare(r.observation);
  HiddenStateBank bank = p.initial_bank(m.limbs.size());
  ModularObservation obs = r.observation;
  Array prev(Shape{m.limbs.size()});
  std::vector<Array> first;
  double drift = 0.0;
  for (int t = 0; t <= steps; ++t) {
    const PolicyOutput out = p.step(cache, obs, prev, &bank);
    if (t == 0) first = out.attention;
    for (std::size_t l = 0; l < out.attention.size(); ++l) drift = std::max(drift, max_abs_diff(out.attention[l], first[l]));
    const SampledAction a = sample_action(out, obs.valid, rng);
    obs = step(r.state, m, r.terrain, a.env_action.data()).observation;
    if (out.new_hidden) bank = *out.new_hidden;
    prev = a.env_action;
  }
  return drift;
}

// A_t = Σ_k (γλ)^k δ_{t+k}, truncated after the first done at or after t.
inline std::vector<double> gae_oracle(const std::vector<double>& r, const std::vector<double>& v, double bootstrap,
                                      const std::vector<bool>& d, double gamma, double lam) {
  const std::size_t n = r.size();
  const auto value = [&](std::size_t t) { return t < n ? v[t] : bootstrap; };
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double w = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      adv[t] += w * (r[k] + gamma * value(k + 1) * (d[k] ? 0.0 : 1.0) - v[k]);
      if (d[k]) break;
      w *= gamma * lam;
    }
  }
  return adv;
}

struct ScheduleReplay {
  std::vector<std::uint64_t> hashes;  // parameter fingerprint after each applied update, initial first
  std::vector<double> kls;            // approx-KL of every minibatch that was checked
  bool stopped = false;
};

// Re-enacts the update schedule by hand: same shuffles, same minibatches, an
// update only while the minibatch approx-KL stays within kl_max.
inline ScheduleReplay replay_update_schedule(Policy& q, const AdamConfig& adam_config, const std::vector<Chunk>& chunks,
                                             const TrainerConfig& c, std::uint64_t rng_seed) {
  Adam adam(q.params(), adam_config);
  Rng rng(rng_seed);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < chunks.size(); ++i)
    if (chunks[i].trained_steps() > 0) order.push_back(i);
  ScheduleReplay out;
  out.hashes.push_back(q.params().fingerprint());
  for (std::size_t e = 0; e < c.epochs_per_iter && !out.stopped; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < order.size(); b += c.minibatch_chunks) {
      std::vector<Var> losses;
      double kl = 0.0, n = 0.0;
      for (std::size_t k = b; k < std::min(order.size(), b + c.minibatch_chunks); ++k) {
        const ChunkLoss cl = chunk_loss(q, chunks[order[k]], c);
        losses.push_back(cl.loss);
        kl += cl.kl_sum;
        n += static_cast<double>(cl.steps);
      }
      out.kls.push_back(kl / n);
      if (kl / n > c.kl_max) {
        out.stopped = true;
        break;
      }
      adam.step(q.params(), backward(scale(sum_scalars(losses), 1.0 / n), q.params()));
      out.hashes.push_back(q.params().fingerprint());
    }
  }
  return out;
}

}  // namespace morphrl::testing
