#include "morphrl/arch/policy.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "morphrl/errors.hpp"

namespace morphrl {

namespace {

// Fixed per-feature input scaling for [angle, angular velocity, tip height].
constexpr double kStateScale[kStateWidth] = {1.0, 0.1, 1.0};
constexpr double kOutputInitStd = 0.01;

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  Array normal(Shape shape, double stddev) {
    Array a(std::move(shape));
    std::normal_distribution<double> d(0.0, stddev);
    for (auto& v : a.data()) v = d(rng_);
    return a;
  }
  // Weight [in, out] with std 1/√in.
  Array weight(std::size_t in, std::size_t out) { return normal(Shape{in, out}, 1.0 / std::sqrt(double(in))); }

 private:
  Rng rng_;
};

Array zeros(std::size_t n) { return Array(Shape{n}); }
Array ones(std::size_t n) { return Array(Shape{n}, 1.0); }

// Hypernetwork output layer. The bias holds a conventional init of the
// generated weights (std target_std) and zero generated biases; the weight
// adds context-dependent variation of comparable scale.
void add_hypernet(ParamStore& ps, Initializer& init, const std::string& prefix, std::size_t hidden,
                  std::size_t gen_weights, std::size_t gen_biases, double target_std) {
  ps.add(prefix + ".w1", init.weight(kContextWidth, hidden));
  ps.add(prefix + ".b1", zeros(hidden));
  ps.add(prefix + ".w2", init.normal(Shape{hidden, gen_weights + gen_biases}, target_std / std::sqrt(double(hidden))));
  Array b2(Shape{gen_weights + gen_biases});
  Array base = init.normal(Shape{gen_weights}, target_std);
  std::copy(base.data().begin(), base.data().end(), b2.data().begin());
  ps.add(prefix + ".b2", std::move(b2));
}

void add_gru(ParamStore& ps, Initializer& init, std::size_t in, std::size_t h) {
  ps.add("gru.w_ih", init.weight(in, 3 * h));
  ps.add("gru.w_hh", init.weight(h, 3 * h));
  ps.add("gru.b_ih", zeros(3 * h));
  ps.add("gru.b_hh", zeros(3 * h));
}

ParamStore build_params(const ModelConfig& c, std::uint64_t seed) {
  validate_model_config(c);
  Initializer init(seed);
  ParamStore ps;
  const std::size_t d = c.d_model;
  const std::size_t s_in = state_feature_width(c);
  switch (c.arch) {
    case ArchKind::metamorph:
      ps.add("encoder.w_state", init.weight(s_in, d));
      ps.add("encoder.w_context", init.weight(kContextWidth, d));
      ps.add("encoder.b", zeros(d));
      break;
    case ArchKind::rmemo:
      add_gru(ps, init, s_in + 1, d / 2);
      ps.add("context_encoder.w", init.weight(kContextWidth, d / 2));
      ps.add("context_encoder.b", zeros(d / 2));
      break;
    case ArchKind::modumorph:
    case ArchKind::rmomo:
      add_hypernet(ps, init, "hyper_encoder", c.hyper_hidden, s_in * d, d, 1.0 / std::sqrt(double(s_in)));
      if (c.arch == ArchKind::rmomo) add_gru(ps, init, d + 1, d);
      ps.add("context_q.w", init.weight(kContextWidth, d));
      ps.add("context_q.b", zeros(d));
      ps.add("context_k.w", init.weight(kContextWidth, d));
      ps.add("context_k.b", zeros(d));
      break;
  }
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    ps.add(p + "attn.wq", init.weight(d, d));
    ps.add(p + "attn.wk", init.weight(d, d));
    ps.add(p + "attn.wv", init.weight(d, d));
    ps.add(p + "attn.wo", init.weight(d, d));
    ps.add(p + "ln1.gain", ones(d));
    ps.add(p + "ln1.bias", zeros(d));
    ps.add(p + "ff1.w", init.weight(d, c.ff_width));
    ps.add(p + "ff1.b", zeros(c.ff_width));
    ps.add(p + "ff2.w", init.weight(c.ff_width, d));
    ps.add(p + "ff2.b", zeros(d));
    ps.add(p + "ln2.gain", ones(d));
    ps.add(p + "ln2.bias", zeros(d));
  }
  if (uses_fixed_attention(c.arch)) {
    add_hypernet(ps, init, "hyper_decoder", c.hyper_hidden, d, 1, kOutputInitStd);
  } else {
    ps.add("decoder.w", init.normal(Shape{d, 1}, kOutputInitStd));
    ps.add("decoder.b", zeros(1));
  }
  ps.add("value.w1", init.weight(d, d));
  ps.add("value.b1", zeros(d));
  ps.add("value.w2", init.normal(Shape{d, 1}, kOutputInitStd));
  ps.add("value.b2", zeros(1));
  ps.add("log_std", Array(Shape{1}, c.log_std_init));
  return ps;
}

}  // namespace

Policy::Policy(ModelConfig config, std::uint64_t seed) : config_(config), params_(build_params(config, seed)) {
  bind();
}

Policy::Policy(ModelConfig config, ParamStore params) : config_(config) {
  const ParamStore reference = build_params(config, 0);
  if (params.size() != reference.size()) {
    throw InvalidInput("checkpoint has " + std::to_string(params.size()) + " parameters, " +
                       std::string(to_string(config.arch)) + " expects " + std::to_string(reference.size()));
  }
  for (const auto& p : reference.items()) {
    if (!params.contains(p.name)) throw InvalidInput("checkpoint is missing parameter " + p.name);
    if (params.get(p.name).shape() != p.var.shape()) {
      throw InvalidInput("checkpoint parameter " + p.name + " has shape " + shape_string(params.get(p.name).shape()) +
                         ", expected " + shape_string(p.var.shape()));
    }
  }
  // Keep the reference ordering so optimizer state and serialization are stable.
  params_ = reference.clone();
  params_.assign_values(params);
  bind();
}

Policy Policy::clone() const { return Policy(config_, params_.clone()); }

void Policy::bind() {
  const auto has = [&](const char* n) { return params_.contains(n); };
  const auto get = [&](const std::string& n) { return params_.get(n); };
  if (has("encoder.w_state")) {
    enc_w_state_ = get("encoder.w_state");
    enc_w_ctx_ = get("encoder.w_context");
    enc_b_ = get("encoder.b");
  }
  if (has("gru.w_ih")) gru_ = GruWeights{get("gru.w_ih"), get("gru.w_hh"), get("gru.b_ih"), get("gru.b_hh")};
  if (has("context_encoder.w")) {
    ctx_enc_w_ = get("context_encoder.w");
    ctx_enc_b_ = get("context_encoder.b");
  }
  if (has("hyper_encoder.w1")) {
    hyper_enc_ = HyperNet{get("hyper_encoder.w1"), get("hyper_encoder.b1"), get("hyper_encoder.w2"),
                          get("hyper_encoder.b2")};
    hyper_dec_ = HyperNet{get("hyper_decoder.w1"), get("hyper_decoder.b1"), get("hyper_decoder.w2"),
                          get("hyper_decoder.b2")};
    ctx_q_w_ = get("context_q.w");
    ctx_q_b_ = get("context_q.b");
    ctx_k_w_ = get("context_k.w");
    ctx_k_b_ = get("context_k.b");
  }
  if (has("decoder.w")) {
    dec_w_ = get("decoder.w");
    dec_b_ = get("decoder.b");
  }
  layers_.clear();
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    layers_.push_back(Layer{get(p + "attn.wq"), get(p + "attn.wk"), get(p + "attn.wv"), get(p + "attn.wo"),
                            get(p + "ln1.gain"), get(p + "ln1.bias"), get(p + "ff1.w"), get(p + "ff1.b"),
                            get(p + "ff2.w"), get(p + "ff2.b"), get(p + "ln2.gain"), get(p + "ln2.bias")});
  }
  value_w1_ = get("value.w1");
  value_b1_ = get("value.b1");
  value_w2_ = get("value.w2");
  value_b2_ = get("value.b2");
  log_std_ = get("log_std");
}

std::size_t Policy::hidden_width() const {
  switch (config_.arch) {
    case ArchKind::rmemo: return config_.d_model / 2;
    case ArchKind::rmomo: return config_.d_model;
    default: return 0;
  }
}

HiddenStateBank Policy::initial_bank(std::size_t slots) const {
  return HiddenStateBank{constant(Array(Shape{slots, hidden_width()}))};
}

void Policy::check_obs(const ModularObservation& obs) const {
  const std::size_t s = obs.slots();
  if (s == 0) throw InvalidInput("observation has no limb slots");
  if (s > config_.max_limbs) {
    throw InvalidInput("observation has " + std::to_string(s) + " slots; the model supports at most " +
                       std::to_string(config_.max_limbs));
  }
  if (obs.state.shape() != Shape{s, kStateWidth} || obs.context.shape() != Shape{s, kContextWidth}) {
    throw InvalidInput("observation arrays do not match its slot count");
  }
  if (obs.lookahead_width() != config_.lookahead_width) {
    throw InvalidInput("observation lookahead width " + std::to_string(obs.lookahead_width()) +
                       " does not match model width " + std::to_string(config_.lookahead_width));
  }
  if (std::none_of(obs.valid.begin(), obs.valid.end(), [](auto v) { return v != 0; })) {
    throw InvalidInput("all limbs are masked");
  }
}

Var Policy::state_features(const ModularObservation& obs) const {
  const std::size_t s = obs.slots();
  const std::size_t t = obs.lookahead_width();
  Array f(Shape{s, kStateWidth + t});
  for (std::size_t i = 0; i < s; ++i) {
    if (!obs.valid[i]) continue;
    for (std::size_t j = 0; j < kStateWidth; ++j) f(i, j) = obs.state(i, j) * kStateScale[j];
    for (std::size_t j = 0; j < t; ++j) f(i, kStateWidth + j) = obs.lookahead[j];
  }
  return constant(std::move(f));
}

Var Policy::hyper(const HyperNet& net, const Var& context) const {
  return linear(tanh(linear(context, net.w1, net.b1)), net.w2, net.b2);
}

ContextCache Policy::prepare(const ModularObservation& obs) const {
  check_obs(obs);
  ContextCache cache;
  cache.slots = obs.slots();
  cache.valid = obs.valid;
  cache.attention_mask = validity_attention_mask(obs.valid);
  cache.context = constant(obs.context);
  const std::size_t d = config_.d_model;
  switch (config_.arch) {
    case ArchKind::metamorph:
      cache.context_embed = linear(cache.context, enc_w_ctx_, enc_b_);
      break;
    case ArchKind::rmemo:
      cache.context_embed = tanh(linear(cache.context, ctx_enc_w_, ctx_enc_b_));
      break;
    case ArchKind::modumorph:
    case ArchKind::rmomo: {
      const std::size_t s_in = state_feature_width(config_);
      const Var enc = hyper(hyper_enc_, cache.context);
      cache.gen_enc_w = slice_cols(enc, 0, s_in * d);
      cache.gen_enc_b = slice_cols(enc, s_in * d, d);
      const Var dec = hyper(hyper_dec_, cache.context);
      cache.gen_dec_w = slice_cols(dec, 0, d);
      cache.gen_dec_b = slice_cols(dec, d, 1);
      cache.xq = tanh(linear(cache.context, ctx_q_w_, ctx_q_b_));
      cache.xk = tanh(linear(cache.context, ctx_k_w_, ctx_k_b_));
      for (const Layer& layer : layers_) {
        cache.fixed_q.push_back(matmul(cache.xq, layer.wq));
        cache.fixed_k.push_back(matmul(cache.xk, layer.wk));
      }
      break;
    }
  }
  return cache;
}

std::pair<Var, HiddenStateBank> Policy::rnn_encode(const Var& limb_inputs, const Array& prev_action,
                                                   const HiddenStateBank& bank) const {
  if (!recurrent()) throw UsageError(std::string(to_string(config_.arch)) + " has no recurrent cell");
  const std::size_t s = limb_inputs.value().rows();
  if (bank.rows() != s || bank.value().cols() != hidden_width()) {
    throw InvalidInput("hidden bank shape " + shape_string(bank.value().shape()) + " does not match " +
                       std::to_string(s) + " limbs x " + std::to_string(hidden_width()));
  }
  Array prev(Shape{s, 1});
  if (!prev_action.empty()) {
    if (prev_action.size() != s) throw InvalidInput("prev_action length does not match limb count");
    std::copy(prev_action.data().begin(), prev_action.data().end(), prev.data().begin());
  }
  const Var h = gru_cell(concat_cols({limb_inputs, constant(std::move(prev))}), bank.h, gru_);
  return {h, HiddenStateBank{h}};
}

Var Policy::transformer_layer(const Layer& layer, const ContextCache& cache, std::size_t index, const Var& x,
                              std::vector<Array>& attention) const {
  const int heads = static_cast<int>(config_.heads);
  AttentionResult attn =
      uses_fixed_attention(config_.arch)
          ? attention_core(cache.fixed_q[index], cache.fixed_k[index], matmul(x, layer.wv), cache.attention_mask,
                           heads)
          : masked_attention(x, x, x, layer.wq, layer.wk, layer.wv, cache.attention_mask, heads);
  attention.push_back(std::move(attn.weights));
  const Var y = layer_norm(add(x, matmul(attn.out, layer.wo)), layer.ln1_gain, layer.ln1_bias);
  const Var f = linear(tanh(linear(y, layer.ff1_w, layer.ff1_b)), layer.ff2_w, layer.ff2_b);
  return layer_norm(add(y, f), layer.ln2_gain, layer.ln2_bias);
}

Var Policy::encoder_layers(const ContextCache& cache, Var x, std::vector<Array>& attention) const {
  for (std::size_t l = 0; l < layers_.size(); ++l) x = transformer_layer(layers_[l], cache, l, x, attention);
  return x;
}

Var Policy::value_head(const ContextCache& cache, const Var& tokens) const {
  const Var pooled = masked_mean_rows(tokens, cache.valid);
  const Var hidden = tanh(linear(pooled, value_w1_, value_b1_));
  return reshape(linear(hidden, value_w2_, value_b2_), Shape{});
}

PolicyOutput Policy::step(const ContextCache& cache, const ModularObservation& obs, const Array& prev_action,
                          const HiddenStateBank* bank) const {
  check_obs(obs);
  const std::size_t s = obs.slots();
  if (cache.slots != s || cache.valid != obs.valid) throw InvalidInput("context cache was built for another robot");
  PolicyOutput out;
  const Var feats = state_features(obs);
  Var x;
  std::optional<HiddenStateBank> initial;
  if (recurrent() && bank == nullptr) {
    initial = initial_bank(s);
    bank = &*initial;
  }
  switch (config_.arch) {
    case ArchKind::metamorph:
      x = tanh(add(matmul(feats, enc_w_state_), cache.context_embed));
      break;
    case ArchKind::rmemo: {
      auto [h, next] = rnn_encode(feats, prev_action, *bank);
      x = concat_cols({h, cache.context_embed});
      out.new_hidden = std::move(next);
      break;
    }
    case ArchKind::modumorph:
      x = tanh(gen_linear(feats, cache.gen_enc_w, cache.gen_enc_b));
      break;
    case ArchKind::rmomo: {
      const Var latent = tanh(gen_linear(feats, cache.gen_enc_w, cache.gen_enc_b));
      auto [h, next] = rnn_encode(latent, prev_action, *bank);
      x = h;
      out.new_hidden = std::move(next);
      break;
    }
  }
  const Var tokens = encoder_layers(cache, x, out.attention);
  if (uses_fixed_attention(config_.arch)) {
    out.mu = reshape(gen_linear(tokens, cache.gen_dec_w, cache.gen_dec_b), Shape{s});
  } else {
    out.mu = reshape(linear(tokens, dec_w_, dec_b_), Shape{s});
  }
  out.value = value_head(cache, tokens);
  out.log_std = reshape(broadcast_rows(clamp(log_std_, kLogStdMin, kLogStdMax), s), Shape{s});
  return out;
}

PolicyOutput Policy::forward(const ModularObservation& obs, const Array& prev_action,
                             const HiddenStateBank* bank) const {
  return step(prepare(obs), obs, prev_action, bank);
}

namespace {
void require_arch(const Policy& p, ArchKind arch) {
  if (p.arch() != arch) {
    throw InvalidInput("policy is " + std::string(to_string(p.arch())) + ", not " + std::string(to_string(arch)));
  }
}
}  // namespace

PolicyOutput metamorph_forward(const ModularObservation& obs, const Policy& policy) {
  require_arch(policy, ArchKind::metamorph);
  return policy.forward(obs);
}

PolicyOutput modumorph_forward(const ModularObservation& obs, const Policy& policy) {
  require_arch(policy, ArchKind::modumorph);
  return policy.forward(obs);
}

PolicyOutput rmemo_forward(const ModularObservation& obs, const Array& prev_action, const HiddenStateBank& bank,
                           const Policy& policy) {
  require_arch(policy, ArchKind::rmemo);
  return policy.forward(obs, prev_action, &bank);
}

PolicyOutput rmomo_forward(const ModularObservation& obs, const Array& prev_action, const HiddenStateBank& bank,
                           const Policy& policy) {
  require_arch(policy, ArchKind::rmomo);
  return policy.forward(obs, prev_action, &bank);
}

}  // namespace morphrl
