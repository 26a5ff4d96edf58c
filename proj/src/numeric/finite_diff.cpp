#include "geann/numeric/finite_diff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace geann::numeric {

std::map<std::string, Tensor> finite_diff_oracle(const ScalarObjective& f,
                                                 const ParameterStore& params, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("finite_diff_oracle: epsilon must be > 0");
  ParameterStore probe = params;
  std::map<std::string, Tensor> out;
  for (const auto& name : params.names()) {
    Tensor grad(params.value(name).shape(), 0.0);
    Tensor& value = probe.value(name);
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + epsilon;
      const double up = f(probe);
      value[i] = saved - epsilon;
      const double down = f(probe);
      value[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw std::domain_error("finite_diff_oracle: non-finite objective at " + name + "[" +
                                std::to_string(i) + "]");
      }
      grad[i] = (up - down) / (2.0 * epsilon);
    }
    out.emplace(name, std::move(grad));
  }
  return out;
}

GradientCheck compare_gradients(const ParameterStore& analytic,
                                const std::map<std::string, Tensor>& numeric, double floor) {
  GradientCheck check;
  for (const auto& [name, num] : numeric) {
    const Tensor& ana = analytic.grad(name);
    for (std::size_t i = 0; i < num.size(); ++i) {
      const double a = ana[i], b = num[i];
      const double scale = std::max(std::abs(a), std::abs(b));
      if (scale < floor) continue;
      ++check.compared;
      const double rel = std::abs(a - b) / scale;
      if (rel > check.max_relative_error) {
        check.max_relative_error = rel;
        check.worst_parameter = name;
        check.worst_index = i;
      }
    }
  }
  return check;
}

}  // namespace geann::numeric
