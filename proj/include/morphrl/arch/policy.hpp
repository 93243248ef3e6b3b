#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "morphrl/domain/generate.hpp"
#include "morphrl/domain/observation.hpp"
#include "morphrl/numeric/kernels.hpp"
#include "morphrl/numeric/params.hpp"

namespace morphrl {

enum class ArchKind { metamorph, modumorph, rmemo, rmomo };

std::string_view to_string(ArchKind arch);
// Throws ConfigError for unknown names.
ArchKind parse_arch_kind(std::string_view name);
bool is_recurrent(ArchKind arch);
// Hypernetwork-conditioned family with context-only queries and keys.
bool uses_fixed_attention(ArchKind arch);

struct ModelConfig {
  ArchKind arch = ArchKind::rmomo;
  std::size_t d_model = 32;
  std::size_t ff_width = 64;
  std::size_t layers = 2;
  std::size_t heads = 1;
  std::size_t hyper_hidden = 64;
  std::size_t lookahead_width = 0;
  std::size_t max_limbs = kDefaultMaxLimbs;
  double log_std_init = -0.5;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Throws ConfigError on inconsistent widths.
void validate_model_config(const ModelConfig& config);

inline constexpr double kLogStdMin = -3.0;
inline constexpr double kLogStdMax = 1.0;

// One recurrent state row per limb slot, [slots, hidden_width]. Starts at zero
// on every episode.
struct HiddenStateBank {
  Var h;

  std::size_t rows() const { return h.value().rows(); }
  const Array& value() const { return h.value(); }
};

struct PolicyOutput {
  Var mu;       // [slots]
  Var log_std;  // [slots], one shared value clamped to [kLogStdMin, kLogStdMax]
  Var value;    // scalar
  std::optional<HiddenStateBank> new_hidden;  // set iff the architecture is recurrent
  std::vector<Array> attention;               // per layer, [heads, slots, slots]
};

// Quantities that depend only on the static part of an episode (context and
// validity mask). Build once per episode or chunk and reuse across steps.
struct ContextCache {
  std::size_t slots = 0;
  Mask valid;
  Mask attention_mask;
  Var context;
  Var context_embed;             // metamorph: ctx·W_c + b; rmemo: context encoder output
  Var gen_enc_w, gen_enc_b;      // hypernetwork-generated encoder
  Var gen_dec_w, gen_dec_b;      // hypernetwork-generated decoder
  Var xq, xk;                         // context-only query/key inputs
  std::vector<Var> fixed_q, fixed_k;  // per-layer X_Q·W_Q and X_K·W_K
};

class Policy {
 public:
  // Fresh parameters, seeded.
  Policy(ModelConfig config, std::uint64_t seed);
  // Parameters loaded from a checkpoint; names and shapes must match config.
  Policy(ModelConfig config, ParamStore params);

  Policy(const Policy&) = delete;
  Policy& operator=(const Policy&) = delete;
  Policy(Policy&&) = default;
  Policy& operator=(Policy&&) = default;

  // Deep copy with independent parameter storage.
  Policy clone() const;

  const ModelConfig& config() const { return config_; }
  ArchKind arch() const { return config_.arch; }
  bool recurrent() const { return is_recurrent(config_.arch); }
  std::size_t hidden_width() const;
  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }

  HiddenStateBank initial_bank(std::size_t slots) const;

  ContextCache prepare(const ModularObservation& obs) const;

  // prev_action is [slots] (zeros at t = 0); bank is required for recurrent
  // architectures and ignored otherwise.
  PolicyOutput step(const ContextCache& cache, const ModularObservation& obs, const Array& prev_action,
                    const HiddenStateBank* bank) const;

  PolicyOutput forward(const ModularObservation& obs, const Array& prev_action = {},
                       const HiddenStateBank* bank = nullptr) const;

  // Shared per-limb GRU over [state part ‖ prev_action]; no cross-limb terms.
  std::pair<Var, HiddenStateBank> rnn_encode(const Var& limb_inputs, const Array& prev_action,
                                             const HiddenStateBank& bank) const;

  // Per-limb state features fed to encoders: scaled state ‖ lookahead.
  Var state_features(const ModularObservation& obs) const;

 private:
  struct Layer {
    Var wq, wk, wv, wo;
    Var ln1_gain, ln1_bias, ff1_w, ff1_b, ff2_w, ff2_b, ln2_gain, ln2_bias;
  };
  struct HyperNet {
    Var w1, b1, w2, b2;
  };

  void bind();
  void check_obs(const ModularObservation& obs) const;
  Var encoder_layers(const ContextCache& cache, Var x, std::vector<Array>& attention) const;
  Var transformer_layer(const Layer& layer, const ContextCache& cache, std::size_t index, const Var& x,
                        std::vector<Array>& attention) const;
  Var value_head(const ContextCache& cache, const Var& tokens) const;
  Var hyper(const HyperNet& net, const Var& context) const;

  ModelConfig config_;
  ParamStore params_;

  std::vector<Layer> layers_;
  Var enc_w_state_, enc_w_ctx_, enc_b_;
  Var dec_w_, dec_b_;
  Var value_w1_, value_b1_, value_w2_, value_b2_;
  Var log_std_;
  HyperNet hyper_enc_, hyper_dec_;
  Var ctx_enc_w_, ctx_enc_b_;
  Var ctx_q_w_, ctx_q_b_, ctx_k_w_, ctx_k_b_;
  GruWeights gru_;
};

std::size_t state_feature_width(const ModelConfig& config);

// Per-architecture entry points; each checks that the policy has the named
// architecture. The mask is obs.valid.
PolicyOutput metamorph_forward(const ModularObservation& obs, const Policy& policy);
PolicyOutput modumorph_forward(const ModularObservation& obs, const Policy& policy);
PolicyOutput rmemo_forward(const ModularObservation& obs, const Array& prev_action, const HiddenStateBank& bank,
                           const Policy& policy);
PolicyOutput rmomo_forward(const ModularObservation& obs, const Array& prev_action, const HiddenStateBank& bank,
                           const Policy& policy);

struct SampledAction {
  Array raw;         // Gaussian draw, used for log-probabilities
  Array env_action;  // raw clipped to [−1, 1]
  double logp = 0.0; // Σ over valid slots, pre-clip
};

SampledAction sample_action(const PolicyOutput& out, const Mask& valid, Rng& rng);
// Deterministic variant: raw = mu.
SampledAction mean_action(const PolicyOutput& out, const Mask& valid);

}  // namespace morphrl
