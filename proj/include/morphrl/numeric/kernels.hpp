#pragma once

// Differentiable kernels. All are pure functions of their inputs; shape
// errors raise InvalidInput.

#include <cstdint>
#include <vector>

#include "morphrl/numeric/autodiff.hpp"

namespace morphrl {

using Mask = std::vector<std::uint8_t>;

// Additive logit for masked-off attention entries.
inline constexpr double kMaskedLogit = -1e30;
inline constexpr double kLayerNormEps = 1e-5;

// Elementwise (identical shapes).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var minimum(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var exp(const Var& a);
Var square(const Var& a);
// Gradient passes only where lo < a < hi.
Var clamp(const Var& a, double lo, double hi);

// x[n, m] + v[m] on every row.
Var add_rowvec(const Var& x, const Var& v);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

// y = x·w + b with x of shape [..., in]; leading dims are preserved.
Var linear(const Var& x, const Var& w, const Var& b);

// Row-wise generated linear map: y[i] = x[i]·reshape(w[i], in, out) + b[i].
Var gen_linear(const Var& x, const Var& w, const Var& b);

Var softmax_rows(const Var& x);

Var layer_norm(const Var& x, const Var& gain, const Var& bias);

struct AttentionResult {
  Var out;
  // Post-softmax weights, shape [heads, N, N]; diagnostic only.
  Array weights;
};

// Scaled dot-product attention with key/query masking. mask is row-major
// N×N, nonzero meaning column j is visible to row i. heads must divide d.
AttentionResult attention_core(const Var& q, const Var& k, const Var& v, const Mask& mask, int heads = 1);

// A = softmax(QKᵀ/√d_head + M)V with Q = xq·wq, K = xk·wk, V = xv·wv.
AttentionResult masked_attention(const Var& xq, const Var& xk, const Var& xv, const Var& wq, const Var& wk,
                                 const Var& wv, const Mask& mask, int heads = 1);

// Visibility mask for a padded token set: valid rows see every valid column;
// padded rows see only themselves so their (unused) outputs stay finite.
Mask validity_attention_mask(const Mask& valid);

// Structural.
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(const Var& x, std::size_t start, std::size_t len);
Var slice(const Var& x, std::size_t start, std::size_t len);
Var broadcast_rows(const Var& v, std::size_t n);
Var reshape(const Var& x, Shape shape);

// Reductions to scalars.
Var sum(const Var& x);
Var mean(const Var& x);
Var sum_scalars(const std::vector<Var>& scalars);
Var weighted_sum(const Var& x, const Array& weights);
Var masked_sum(const Var& x, const Mask& valid);
// Mean over rows whose mask entry is nonzero; x is [N, d], result [d].
Var masked_mean_rows(const Var& x, const Mask& valid);

// Σ_i valid_i · log N(action_i; mu_i, exp(log_std_i)²).
Var gaussian_logp(const Var& mu, const Var& log_std, const Array& action, const Mask& valid);

struct GruWeights {
  Var w_ih;  // [in, 3h], gate order (reset, update, candidate)
  Var w_hh;  // [h, 3h]
  Var b_ih;  // [3h]
  Var b_hh;  // [3h]
};

// r = σ(x W_ir + b_ir + h W_hr + b_hr), z = σ(...), n = tanh(x W_in + b_in + r ⊙ (h W_hn + b_hn)),
// h' = (1 − z) ⊙ n + z ⊙ h. inp is [in] or [N, in], h matches it as [h] or [N, h].
Var gru_cell(const Var& inp, const Var& h, const GruWeights& w);

}  // namespace morphrl
