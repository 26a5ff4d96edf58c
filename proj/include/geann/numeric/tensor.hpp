#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace geann::numeric {

/// Raised when operand shapes are inconsistent; `op()` names the offending op.
class ShapeError : public std::invalid_argument {
 public:
  ShapeError(std::string op, const std::string& detail)
      : std::invalid_argument(op + ": " + detail), op_(std::move(op)) {}
  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major tensor of 64-bit reals.
///
/// Most of the library treats tensors as matrices: `rows()` is the leading
/// dimension and `cols()` is the product of the remaining ones.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return Tensor({rows, cols}, fill);
  }
  static Tensor scalar(double v) { return Tensor({1}, std::vector<double>{v}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return values_.size(); }
  std::size_t rows() const noexcept { return shape_.empty() ? 1 : shape_[0]; }
  std::size_t cols() const noexcept;

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  /// Scalar value; throws unless the tensor holds exactly one element.
  double item() const;

  void fill(double v);
  bool all_finite() const noexcept;
  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

}  // namespace geann::numeric
