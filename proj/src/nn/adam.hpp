#pragma once

#include <cstdint>
#include <vector>

#include "nn/tensor.hpp"

namespace autoasm::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments. Moment buffers are created on the first
/// step and must keep the same shapes afterwards.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads);

  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  std::int64_t steps() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace autoasm::nn
