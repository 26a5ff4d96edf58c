#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "geann/numeric/parameters.hpp"
#include "geann/numeric/sparse.hpp"
#include "geann/numeric/tensor.hpp"

namespace geann::numeric {

using NodeId = std::size_t;

enum class OpKind {
  kInput,
  kParam,
  kConstant,
  kLinear,        // x W (+ b)
  kCausalConv,    // dilated causal 1-D convolution over row blocks
  kRelu,
  kSoftmax,       // row-wise
  kConcat,        // column concatenation
  kSum,
  kMean,
  kSparseMatMul,  // S x with constant CSR S
  kWeightedSum,   // sum_r w[r] x_r
  kPinball,       // elementwise mask * L_q(target, x)
};

std::string op_name(OpKind kind);

/// Per-element quantile-loss operands. Column c of the prediction uses
/// `column_quantiles[c % column_quantiles.size()]`.
struct PinballTargets {
  Tensor targets;
  Tensor mask;
  std::vector<double> column_quantiles;
};

/// A static DAG of primitive ops. Nodes are appended in topological order, so
/// node ids double as an evaluation schedule.
class ComputeGraph {
 public:
  NodeId input(const std::string& name);
  NodeId param(const std::string& name);
  NodeId constant(Tensor value);

  NodeId linear(NodeId x, NodeId weight);
  NodeId linear(NodeId x, NodeId weight, NodeId bias);
  /// `x` holds `x.rows() / seq_len` sequences of `seq_len` rows each; weight
  /// shape is (kernel, in, out). Output row t reads input rows t - j*dilation.
  NodeId causal_conv(NodeId x, NodeId weight, NodeId bias, std::size_t seq_len,
                     std::size_t dilation);
  NodeId relu(NodeId x);
  NodeId softmax(NodeId x);
  NodeId concat(std::vector<NodeId> parts);
  NodeId sum(NodeId x);
  NodeId mean(NodeId x);
  NodeId sparse_matmul(std::shared_ptr<const CsrMatrix> matrix, NodeId x);
  NodeId weighted_sum(NodeId weights, std::vector<NodeId> parts);
  NodeId pinball(NodeId prediction, std::shared_ptr<const PinballTargets> targets);

  /// Names a node so evaluate() reports its value.
  void mark_output(const std::string& name, NodeId node);

  std::size_t size() const noexcept { return nodes_.size(); }

  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    std::string name;
    std::size_t seq_len = 0;
    std::size_t dilation = 1;
    std::shared_ptr<const Tensor> constant;
    std::shared_ptr<const CsrMatrix> matrix;
    std::shared_ptr<const PinballTargets> pinball;
  };
  const Node& node(NodeId id) const { return nodes_.at(id); }
  const std::map<std::string, NodeId>& outputs() const noexcept { return outputs_; }

 private:
  NodeId push(Node node);

  std::vector<Node> nodes_;
  std::map<std::string, NodeId> outputs_;
};

/// Forward values for every node of one evaluation.
class Activations {
 public:
  const Tensor& value(NodeId id) const { return values_.at(id); }
  std::map<std::string, Tensor> outputs(const ComputeGraph& graph) const;

 private:
  friend Activations evaluate(const ComputeGraph&, const std::map<std::string, Tensor>&,
                              const ParameterStore&);
  std::vector<Tensor> values_;
};

/// Runs the forward pass. Pure: neither inputs nor params are modified.
/// Throws ShapeError naming the offending op on inconsistent operands.
Activations evaluate(const ComputeGraph& graph, const std::map<std::string, Tensor>& inputs,
                     const ParameterStore& params);

/// Zeroes every grad slot, then accumulates d(loss)/d(param) for all params
/// reachable from `loss`. The loss node must be scalar.
void backward(const ComputeGraph& graph, const Activations& forward, NodeId loss,
              ParameterStore& params);

}  // namespace geann::numeric
