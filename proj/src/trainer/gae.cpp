#include "morphrl/trainer/gae.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "morphrl/errors.hpp"

namespace morphrl {

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, std::span<const bool> dones,
                      double gamma, double lam) {
  const std::size_t n = rewards.size();
  if (dones.size() != n || (values.size() != n && values.size() != n + 1)) {
    throw InvalidInput("compute_gae: " + std::to_string(n) + " rewards, " + std::to_string(values.size()) +
                       " values, " + std::to_string(dones.size()) + " done flags");
  }
  const double bootstrap = values.size() == n + 1 ? values[n] : 0.0;
  GaeResult out{std::vector<double>(n), std::vector<double>(n)};
  double next_adv = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double live = dones[k] ? 0.0 : 1.0;
    const double next_value = k + 1 < n ? values[k + 1] : bootstrap;
    const double delta = rewards[k] + gamma * next_value * live - values[k];
    next_adv = delta + gamma * lam * live * next_adv;
    out.advantages[k] = next_adv;
    out.returns[k] = next_adv + values[k];
  }
  return out;
}

void normalize(std::span<double> values) {
  if (values.empty()) return;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  for (double& v : values) v = sd > 1e-12 ? (v - mean) / sd : 0.0;
}

}  // namespace morphrl
