#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "morphrl/arch/policy.hpp"
#include "morphrl/errors.hpp"

namespace morphrl {

namespace {

SampledAction finish(const PolicyOutput& out, const Mask& valid, Array raw) {
  const std::size_t n = raw.size();
  SampledAction s;
  s.env_action = Array(Shape{n});
  for (std::size_t i = 0; i < n; ++i) s.env_action[i] = valid[i] ? std::clamp(raw[i], -1.0, 1.0) : 0.0;
  NoGradGuard no_grad;
  s.logp = gaussian_logp(out.mu, out.log_std, raw, valid).value().item();
  s.raw = std::move(raw);
  return s;
}

}  // namespace

SampledAction sample_action(const PolicyOutput& out, const Mask& valid, Rng& rng) {
  const Array& mu = out.mu.value();
  const Array& log_std = out.log_std.value();
  if (mu.size() != valid.size() || log_std.size() != valid.size()) {
    throw InvalidInput("sample_action: mask length does not match policy output");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Array raw(Shape{mu.size()});
  for (std::size_t i = 0; i < mu.size(); ++i) {
    // Padded slots draw too, so the stream does not depend on the mask.
    const double z = normal(rng);
    raw[i] = valid[i] ? mu[i] + std::exp(log_std[i]) * z : 0.0;
  }
  return finish(out, valid, std::move(raw));
}

SampledAction mean_action(const PolicyOutput& out, const Mask& valid) {
  if (out.mu.size() != valid.size()) throw InvalidInput("mean_action: mask length does not match policy output");
  Array raw = out.mu.value();
  for (std::size_t i = 0; i < raw.size(); ++i)
    if (!valid[i]) raw[i] = 0.0;
  return finish(out, valid, std::move(raw));
}

}  // namespace morphrl
