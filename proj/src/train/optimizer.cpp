#include "geann/train/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace geann::train {

Optimizer::Optimizer(OptimizerConfig cfg) : cfg_(cfg) {
  if (!(cfg_.learning_rate > 0.0)) throw std::invalid_argument("optimizer: learning rate must be > 0");
  if (cfg_.kind == OptimizerKind::kAdamW) {
    if (!(cfg_.beta1 >= 0.0 && cfg_.beta1 < 1.0 && cfg_.beta2 >= 0.0 && cfg_.beta2 < 1.0)) {
      throw std::invalid_argument("optimizer: betas must lie in [0,1)");
    }
    if (!(cfg_.epsilon > 0.0) || cfg_.weight_decay < 0.0) {
      throw std::invalid_argument("optimizer: need epsilon > 0 and weight decay >= 0");
    }
  }
}

void Optimizer::step(numeric::ParameterStore& params) {
  for (const auto& [name, p] : params) {
    if (!p.grad.all_finite()) throw std::domain_error("optimizer: non-finite gradient in " + name);
  }
  ++steps_;
  const double lr = cfg_.learning_rate;
  if (cfg_.kind == OptimizerKind::kGradientDescent) {
    for (auto& [_, p] : params) {
      for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] -= lr * p.grad[i];
    }
    return;
  }
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(cfg_.beta1, t);
  const double c2 = 1.0 - std::pow(cfg_.beta2, t);
  const double decay = 1.0 - lr * cfg_.weight_decay;
  for (auto& [name, p] : params) {
    auto it = moments_.find(name);
    if (it == moments_.end()) {
      it = moments_
               .emplace(name, Moments{numeric::Tensor(p.value.shape(), 0.0),
                                      numeric::Tensor(p.value.shape(), 0.0)})
               .first;
    }
    Moments& mo = it->second;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      mo.first[i] = cfg_.beta1 * mo.first[i] + (1.0 - cfg_.beta1) * g;
      mo.second[i] = cfg_.beta2 * mo.second[i] + (1.0 - cfg_.beta2) * g * g;
      const double m_hat = mo.first[i] / c1;
      const double v_hat = mo.second[i] / c2;
      p.value[i] = p.value[i] * decay - lr * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
    }
  }
}

}  // namespace geann::train
