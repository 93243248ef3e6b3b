#include "morphrl/numeric/optim.hpp"

#include <cmath>

#include "morphrl/errors.hpp"

namespace morphrl {

Adam::Adam(const ParamStore& params, AdamConfig config) : config_(config) {
  for (const auto& p : params.items()) {
    m_.emplace_back(p.var.shape());
    v_.emplace_back(p.var.shape());
  }
}

double global_grad_norm(const GradientMap& grads) {
  double sq = 0.0;
  for (const auto& [name, g] : grads)
    for (double v : g.data()) sq += v * v;
  return std::sqrt(sq);
}

void Adam::step(const ParamStore& params, const GradientMap& grads) {
  if (params.size() != m_.size()) throw InvalidInput("Adam: parameter store changed size");
  ++t_;
  double clip = 1.0;
  if (config_.max_grad_norm > 0.0) {
    const double norm = global_grad_norm(grads);
    if (norm > config_.max_grad_norm) clip = config_.max_grad_norm / norm;
  }
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Parameter& p = params.items()[k];
    if (!p.trainable) continue;
    const Array& g = grads.at(p.name);
    Var var = p.var;
    Array& w = var.mutable_value();
    Array& m = m_[k];
    Array& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] * clip;
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * gi;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * gi * gi;
      w[i] -= config_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config_.eps);
    }
  }
}

}  // namespace morphrl
