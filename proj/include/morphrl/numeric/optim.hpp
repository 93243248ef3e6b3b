#pragma once

#include <vector>

#include "morphrl/numeric/params.hpp"

namespace morphrl {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Global gradient-norm clip; <= 0 disables.
  double max_grad_norm = 0.5;
};

// Adam over the trainable members of a ParamStore. Moment buffers follow the
// store's parameter order.
class Adam {
 public:
  Adam(const ParamStore& params, AdamConfig config);

  void step(const ParamStore& params, const GradientMap& grads);
  void set_lr(double lr) { config_.lr = lr; }
  const AdamConfig& config() const { return config_; }
  long steps_taken() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<Array> m_;
  std::vector<Array> v_;
  long t_ = 0;
};

double global_grad_norm(const GradientMap& grads);

}  // namespace morphrl
