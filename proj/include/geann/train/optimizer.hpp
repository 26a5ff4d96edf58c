#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "geann/numeric/parameters.hpp"

namespace geann::train {

enum class OptimizerKind { kGradientDescent, kAdamW };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdamW;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

/// Plain descent (theta -= lr * g) or Adam with decoupled weight decay
/// (theta *= 1 - lr * wd, then the bias-corrected moment step). Moment state
/// is keyed by parameter name and persists across step() calls.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg);

  /// Applies one update from the grad slots. Throws std::domain_error on a
  /// non-finite gradient (parameters are left untouched in that case).
  void step(numeric::ParameterStore& params);

  std::size_t steps_taken() const noexcept { return steps_; }
  const OptimizerConfig& config() const noexcept { return cfg_; }

 private:
  struct Moments {
    numeric::Tensor first;
    numeric::Tensor second;
  };
  OptimizerConfig cfg_;
  std::size_t steps_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace geann::train
