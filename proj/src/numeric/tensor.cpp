#include "geann/numeric/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace geann::numeric {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_size(shape_) != values_.size()) {
    throw ShapeError("tensor", "shape " + shape_string(shape_) + " does not match " +
                                   std::to_string(values_.size()) + " values");
  }
}

std::size_t Tensor::cols() const noexcept {
  std::size_t c = 1;
  for (std::size_t i = 1; i < shape_.size(); ++i) c *= shape_[i];
  return c;
}

double Tensor::item() const {
  if (values_.size() != 1) {
    throw ShapeError("item", "expected a scalar, got shape " + shape_string(shape_));
  }
  return values_[0];
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::reshaped(Shape shape) const {
  return Tensor(std::move(shape), values_);
}

}  // namespace geann::numeric
