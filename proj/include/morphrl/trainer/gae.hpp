#pragma once

#include <span>
#include <vector>

namespace morphrl {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// δ_t = r_t + γ·v_{t+1}·(1 − done_t) − v_t, A_t = δ_t + γλ(1 − done_t)·A_{t+1},
// returns = A + v. values has one entry per reward, or one extra trailing
// bootstrap value for a truncated final step (otherwise 0).
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, std::span<const bool> dones,
                      double gamma, double lam);

// Rescales to mean 0, std 1 in place; constant input becomes all zeros.
void normalize(std::span<double> values);

}  // namespace morphrl
