#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "geann/numeric/tensor.hpp"

namespace geann::numeric {

struct Parameter {
  Tensor value;
  Tensor grad;
};

/// Named trainable tensors with gradient slots. Iteration order is by name,
/// which keeps serialization and optimizer updates deterministic.
class ParameterStore {
 public:
  ParameterStore() = default;
  explicit ParameterStore(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  /// Adds a parameter; throws std::invalid_argument on a duplicate name.
  Parameter& add(const std::string& name, Tensor value);

  /// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)). The stream is
  /// derived from (seed, name) so the draw does not depend on insertion order.
  Parameter& add_glorot(const std::string& name, Shape shape, std::size_t fan_in,
                        std::size_t fan_out);
  Parameter& add_zeros(const std::string& name, Shape shape);

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  const Tensor& value(const std::string& name) const;
  Tensor& value(const std::string& name);
  const Tensor& grad(const std::string& name) const;
  Tensor& grad(const std::string& name);

  std::vector<std::string> names() const;
  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();
  bool all_finite() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  /// Values only; gradients are not persisted.
  void save(std::ostream& out) const;
  static ParameterStore load(std::istream& in);

  friend bool operator==(const ParameterStore& a, const ParameterStore& b);

 private:
  const Parameter& at(const std::string& name) const;
  Parameter& at(const std::string& name);

  std::uint64_t seed_ = 0;
  std::map<std::string, Parameter> params_;
};

/// 64-bit stream seed derived from a base seed and a label (FNV-1a + splitmix).
std::uint64_t derive_seed(std::uint64_t seed, const std::string& label);

}  // namespace geann::numeric
