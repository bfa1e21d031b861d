#include "nn/adam.hpp"

#include <cmath>
#include <string>

#include "error.hpp"

namespace autoasm::nn {

void Adam::step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads) {
  if (params.size() != grads.size()) fail(ErrorCode::ShapeMismatch, "parameter and gradient lists differ in length");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i]->shape != grads[i]->shape)
      fail(ErrorCode::ShapeMismatch, "gradient " + std::to_string(i) + " does not match its parameter shape");

  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  } else if (m_.size() != params.size()) {
    fail(ErrorCode::ShapeMismatch, "optimizer state belongs to a different parameter set");
  }

  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (m_[i].size() != params[i]->size()) fail(ErrorCode::ShapeMismatch, "optimizer state size changed");
    double* w = params[i]->data.data();
    const double* g = grads[i]->data.data();
    double* m = m_[i].data();
    double* v = v_[i].data();
    for (std::size_t j = 0; j < m_[i].size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      w[j] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

}  // namespace autoasm::nn
