#pragma once

#include <functional>
#include <map>
#include <string>

#include "geann/numeric/parameters.hpp"

namespace geann::numeric {

using ScalarObjective = std::function<double(const ParameterStore&)>;

/// Central-difference gradient (f(p+eps) - f(p-eps)) / (2 eps) for every
/// scalar of every parameter. Throws std::domain_error on a non-finite f.
std::map<std::string, Tensor> finite_diff_oracle(const ScalarObjective& f,
                                                 const ParameterStore& params,
                                                 double epsilon = 1e-4);

struct GradientCheck {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t compared = 0;
};

/// Relative error |a-b| / max(|a|,|b|) over entries where either magnitude
/// reaches `floor`.
GradientCheck compare_gradients(const ParameterStore& analytic,
                                const std::map<std::string, Tensor>& numeric,
                                double floor = 1e-8);

}  // namespace geann::numeric
