#include "geann/numeric/compute_graph.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace geann::numeric {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

MatMap as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
  return MatMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

ConstMatMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMatMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

ConstMatMap as_matrix(const Tensor& t) { return as_matrix(t, t.rows(), t.cols()); }
MatMap as_matrix(Tensor& t) { return as_matrix(t, t.rows(), t.cols()); }

void require(bool ok, OpKind kind, const std::string& detail) {
  if (!ok) throw ShapeError(op_name(kind), detail);
}

double pinball_value(double target, double forecast, double q) {
  const double diff = target - forecast;
  return diff > 0.0 ? q * diff : (q - 1.0) * diff;
}

double pinball_slope(double target, double forecast, double q) {
  if (forecast > target) return 1.0 - q;
  if (forecast < target) return -q;
  return 0.0;
}

// Row blocks of `seq_len` rows: rows with in-block position < shift get no
// contribution from a tap of that shift.
void shifted_accumulate(const Tensor& source, Tensor& dest, std::size_t seq_len,
                        std::size_t shift, bool forward_direction) {
  const std::size_t cols = source.cols();
  const std::size_t blocks = source.rows() / seq_len;
  if (shift >= seq_len) return;
  const auto span = static_cast<Eigen::Index>((seq_len - shift) * cols);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t base = b * seq_len;
    const std::size_t src_row = forward_direction ? base : base + shift;
    const std::size_t dst_row = forward_direction ? base + shift : base;
    Eigen::Map<Eigen::VectorXd>(dest.data() + dst_row * cols, span) +=
        Eigen::Map<const Eigen::VectorXd>(source.data() + src_row * cols, span);
  }
}

// Fixed summation order: Eigen's vectorised reductions peel by address, so
// results could differ between otherwise identical runs.
void add_column_sums(const Tensor& dy, Tensor& db) {
  const std::size_t rows = dy.rows(), cols = dy.cols();
  const double* src = dy.data();
  double* dst = db.data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) dst[c] += src[r * cols + c];
  }
}

double ordered_dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::string op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kInput: return "input";
    case OpKind::kParam: return "param";
    case OpKind::kConstant: return "constant";
    case OpKind::kLinear: return "linear";
    case OpKind::kCausalConv: return "causal_conv";
    case OpKind::kRelu: return "relu";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kConcat: return "concat";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSparseMatMul: return "sparse_matmul";
    case OpKind::kWeightedSum: return "weighted_sum";
    case OpKind::kPinball: return "pinball";
  }
  return "unknown";
}

NodeId ComputeGraph::push(Node node) {
  for (NodeId in : node.inputs) {
    if (in >= nodes_.size()) {
      throw std::invalid_argument(op_name(node.kind) + ": input node " + std::to_string(in) +
                                  " does not exist yet");
    }
  }
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

NodeId ComputeGraph::input(const std::string& name) {
  return push({.kind = OpKind::kInput, .name = name});
}

NodeId ComputeGraph::param(const std::string& name) {
  return push({.kind = OpKind::kParam, .name = name});
}

NodeId ComputeGraph::constant(Tensor value) {
  return push({.kind = OpKind::kConstant,
               .constant = std::make_shared<const Tensor>(std::move(value))});
}

NodeId ComputeGraph::linear(NodeId x, NodeId weight) {
  return push({.kind = OpKind::kLinear, .inputs = {x, weight}});
}

NodeId ComputeGraph::linear(NodeId x, NodeId weight, NodeId bias) {
  return push({.kind = OpKind::kLinear, .inputs = {x, weight, bias}});
}

NodeId ComputeGraph::causal_conv(NodeId x, NodeId weight, NodeId bias, std::size_t seq_len,
                                 std::size_t dilation) {
  if (seq_len == 0 || dilation == 0) {
    throw ShapeError("causal_conv", "seq_len and dilation must be positive");
  }
  return push({.kind = OpKind::kCausalConv,
               .inputs = {x, weight, bias},
               .seq_len = seq_len,
               .dilation = dilation});
}

NodeId ComputeGraph::relu(NodeId x) { return push({.kind = OpKind::kRelu, .inputs = {x}}); }
NodeId ComputeGraph::softmax(NodeId x) { return push({.kind = OpKind::kSoftmax, .inputs = {x}}); }

NodeId ComputeGraph::concat(std::vector<NodeId> parts) {
  if (parts.empty()) throw ShapeError("concat", "needs at least one operand");
  return push({.kind = OpKind::kConcat, .inputs = std::move(parts)});
}

NodeId ComputeGraph::sum(NodeId x) { return push({.kind = OpKind::kSum, .inputs = {x}}); }
NodeId ComputeGraph::mean(NodeId x) { return push({.kind = OpKind::kMean, .inputs = {x}}); }

NodeId ComputeGraph::sparse_matmul(std::shared_ptr<const CsrMatrix> matrix, NodeId x) {
  return push({.kind = OpKind::kSparseMatMul, .inputs = {x}, .matrix = std::move(matrix)});
}

NodeId ComputeGraph::weighted_sum(NodeId weights, std::vector<NodeId> parts) {
  if (parts.empty()) throw ShapeError("weighted_sum", "needs at least one operand");
  std::vector<NodeId> inputs{weights};
  inputs.insert(inputs.end(), parts.begin(), parts.end());
  return push({.kind = OpKind::kWeightedSum, .inputs = std::move(inputs)});
}

NodeId ComputeGraph::pinball(NodeId prediction, std::shared_ptr<const PinballTargets> targets) {
  return push({.kind = OpKind::kPinball, .inputs = {prediction}, .pinball = std::move(targets)});
}

void ComputeGraph::mark_output(const std::string& name, NodeId node) {
  if (node >= nodes_.size()) throw std::out_of_range("mark_output: no node " + std::to_string(node));
  outputs_[name] = node;
}

std::map<std::string, Tensor> Activations::outputs(const ComputeGraph& graph) const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, id] : graph.outputs()) out.emplace(name, values_.at(id));
  return out;
}

Activations evaluate(const ComputeGraph& graph, const std::map<std::string, Tensor>& inputs,
                     const ParameterStore& params) {
  Activations act;
  act.values_.resize(graph.size());
  auto& v = act.values_;

  for (NodeId id = 0; id < graph.size(); ++id) {
    const auto& n = graph.node(id);
    const OpKind k = n.kind;
    switch (k) {
      case OpKind::kInput: {
        auto it = inputs.find(n.name);
        if (it == inputs.end()) throw std::invalid_argument("input: missing input '" + n.name + "'");
        v[id] = it->second;
        break;
      }
      case OpKind::kParam:
        if (!params.contains(n.name)) {
          throw std::invalid_argument("param: missing parameter '" + n.name + "'");
        }
        v[id] = params.value(n.name);
        break;
      case OpKind::kConstant:
        v[id] = *n.constant;
        break;
      case OpKind::kLinear: {
        const Tensor& x = v[n.inputs[0]];
        const Tensor& w = v[n.inputs[1]];
        require(w.rank() == 2 && x.cols() == w.rows(), k,
                "x " + shape_string(x.shape()) + " incompatible with W " + shape_string(w.shape()));
        Tensor out = Tensor::matrix(x.rows(), w.cols());
        as_matrix(out).noalias() = as_matrix(x) * as_matrix(w);
        if (n.inputs.size() == 3) {
          const Tensor& b = v[n.inputs[2]];
          require(b.size() == w.cols(), k, "bias size " + std::to_string(b.size()) +
                                               " != output width " + std::to_string(w.cols()));
          as_matrix(out).rowwise() += as_matrix(b, 1, b.size()).row(0);
        }
        v[id] = std::move(out);
        break;
      }
      case OpKind::kCausalConv: {
        const Tensor& x = v[n.inputs[0]];
        const Tensor& w = v[n.inputs[1]];
        const Tensor& b = v[n.inputs[2]];
        require(w.rank() == 3 && w.shape()[1] == x.cols(), k,
                "weight " + shape_string(w.shape()) + " incompatible with input width " +
                    std::to_string(x.cols()));
        require(x.rows() % n.seq_len == 0, k,
                std::to_string(x.rows()) + " rows not divisible by seq_len " +
                    std::to_string(n.seq_len));
        const std::size_t taps = w.shape()[0], cin = w.shape()[1], cout = w.shape()[2];
        require(b.size() == cout, k, "bias size mismatch");
        Tensor out = Tensor::matrix(x.rows(), cout);
        as_matrix(out).rowwise() = as_matrix(b, 1, cout).row(0);
        Tensor tap_out;
        for (std::size_t j = 0; j < taps; ++j) {
          ConstMatMap wj(w.data() + j * cin * cout, static_cast<Eigen::Index>(cin),
                         static_cast<Eigen::Index>(cout));
          if (j * n.dilation == 0) {
            as_matrix(out).noalias() += as_matrix(x) * wj;
            continue;
          }
          if (tap_out.size() == 0) tap_out = Tensor::matrix(x.rows(), cout);
          as_matrix(tap_out).noalias() = as_matrix(x) * wj;
          shifted_accumulate(tap_out, out, n.seq_len, j * n.dilation, true);
        }
        v[id] = std::move(out);
        break;
      }
      case OpKind::kRelu: {
        Tensor out = v[n.inputs[0]];
        for (double& e : out.values()) e = e > 0.0 ? e : 0.0;
        v[id] = std::move(out);
        break;
      }
      case OpKind::kSoftmax: {
        Tensor out = v[n.inputs[0]];
        const std::size_t rows = out.rows(), cols = out.size() / std::max<std::size_t>(rows, 1);
        const std::size_t stride = out.rank() <= 1 ? out.size() : cols;
        const std::size_t nrows = out.rank() <= 1 ? 1 : rows;
        for (std::size_t r = 0; r < nrows; ++r) {
          double* row = out.data() + r * stride;
          const double mx = *std::max_element(row, row + stride);
          double total = 0.0;
          for (std::size_t c = 0; c < stride; ++c) total += (row[c] = std::exp(row[c] - mx));
          for (std::size_t c = 0; c < stride; ++c) row[c] /= total;
        }
        v[id] = std::move(out);
        break;
      }
      case OpKind::kConcat: {
        const std::size_t rows = v[n.inputs[0]].rows();
        std::size_t width = 0;
        for (NodeId in : n.inputs) {
          require(v[in].rows() == rows, k,
                  "row count " + std::to_string(v[in].rows()) + " != " + std::to_string(rows));
          width += v[in].cols();
        }
        Tensor out = Tensor::matrix(rows, width);
        std::size_t offset = 0;
        for (NodeId in : n.inputs) {
          const Tensor& part = v[in];
          as_matrix(out).middleCols(static_cast<Eigen::Index>(offset),
                                    static_cast<Eigen::Index>(part.cols())) = as_matrix(part);
          offset += part.cols();
        }
        v[id] = std::move(out);
        break;
      }
      case OpKind::kSum:
      case OpKind::kMean: {
        const Tensor& x = v[n.inputs[0]];
        double total = 0.0;
        for (double e : x.values()) total += e;
        if (k == OpKind::kMean) {
          require(x.size() > 0, k, "mean of empty tensor");
          total /= static_cast<double>(x.size());
        }
        v[id] = Tensor::scalar(total);
        break;
      }
      case OpKind::kSparseMatMul: {
        const Tensor& x = v[n.inputs[0]];
        const CsrMatrix& s = *n.matrix;
        require(s.cols == x.rows(), k,
                "matrix has " + std::to_string(s.cols) + " columns, operand has " +
                    std::to_string(x.rows()) + " rows");
        const std::size_t cols = x.cols();
        Tensor out = Tensor::matrix(s.rows, cols);
        for (std::size_t i = 0; i < s.rows; ++i) {
          double* dst = out.data() + i * cols;
          for (std::size_t p = s.row_ptr[i]; p < s.row_ptr[i + 1]; ++p) {
            const double a = s.values[p];
            const double* src = x.data() + s.col_idx[p] * cols;
            for (std::size_t c = 0; c < cols; ++c) dst[c] += a * src[c];
          }
        }
        v[id] = std::move(out);
        break;
      }
      case OpKind::kWeightedSum: {
        const Tensor& w = v[n.inputs[0]];
        require(w.size() == n.inputs.size() - 1, k,
                std::to_string(w.size()) + " weights for " + std::to_string(n.inputs.size() - 1) +
                    " operands");
        const Tensor& first = v[n.inputs[1]];
        Tensor out(first.shape(), 0.0);
        for (std::size_t r = 0; r + 1 < n.inputs.size(); ++r) {
          const Tensor& part = v[n.inputs[r + 1]];
          require(part.shape() == first.shape(), k, "operand shapes differ");
          as_matrix(out) += w[r] * as_matrix(part);
        }
        v[id] = std::move(out);
        break;
      }
      case OpKind::kPinball: {
        const Tensor& x = v[n.inputs[0]];
        const PinballTargets& pt = *n.pinball;
        require(pt.targets.size() == x.size() && pt.mask.size() == x.size(), k,
                "targets/mask do not match prediction " + shape_string(x.shape()));
        require(!pt.column_quantiles.empty(), k, "no quantiles");
        const std::size_t cols = x.cols(), nq = pt.column_quantiles.size();
        Tensor out(x.shape(), 0.0);
        for (std::size_t e = 0; e < x.size(); ++e) {
          if (pt.mask[e] == 0.0) continue;
          out[e] = pt.mask[e] *
                   pinball_value(pt.targets[e], x[e], pt.column_quantiles[(e % cols) % nq]);
        }
        v[id] = std::move(out);
        break;
      }
    }
  }
  return act;
}

void backward(const ComputeGraph& graph, const Activations& forward, NodeId loss,
              ParameterStore& params) {
  if (loss >= graph.size()) throw std::out_of_range("backward: no node " + std::to_string(loss));
  if (forward.value(loss).size() != 1) {
    throw ShapeError("backward", "loss node is not scalar: shape " +
                                     shape_string(forward.value(loss).shape()));
  }
  params.zero_grad();

  // Nodes with no parameter upstream never need a gradient.
  std::vector<bool> needs(loss + 1, false);
  for (NodeId id = 0; id <= loss; ++id) {
    const auto& n = graph.node(id);
    needs[id] = n.kind == OpKind::kParam;
    for (NodeId in : n.inputs) needs[id] = needs[id] || needs[in];
  }

  std::vector<Tensor> g(loss + 1);
  std::vector<bool> live(loss + 1, false);
  auto grad_of = [&](NodeId id) -> Tensor& {
    if (!live[id]) {
      g[id] = Tensor(forward.value(id).shape(), 0.0);
      live[id] = true;
    }
    return g[id];
  };
  grad_of(loss)[0] = 1.0;

  for (NodeId id = loss + 1; id-- > 0;) {
    if (!live[id] || !needs[id]) continue;
    const auto& n = graph.node(id);
    const Tensor& dy = g[id];
    switch (n.kind) {
      case OpKind::kInput:
      case OpKind::kConstant:
        break;
      case OpKind::kParam: {
        Tensor& slot = params.grad(n.name);
        as_matrix(slot, 1, slot.size()) += as_matrix(dy, 1, dy.size());
        break;
      }
      case OpKind::kLinear: {
        const Tensor& x = forward.value(n.inputs[0]);
        const Tensor& w = forward.value(n.inputs[1]);
        if (needs[n.inputs[0]]) {
          as_matrix(grad_of(n.inputs[0])).noalias() += as_matrix(dy) * as_matrix(w).transpose();
        }
        as_matrix(grad_of(n.inputs[1])).noalias() += as_matrix(x).transpose() * as_matrix(dy);
        if (n.inputs.size() == 3) {
          add_column_sums(dy, grad_of(n.inputs[2]));
        }
        break;
      }
      case OpKind::kCausalConv: {
        const Tensor& x = forward.value(n.inputs[0]);
        const Tensor& w = forward.value(n.inputs[1]);
        const std::size_t taps = w.shape()[0], cin = w.shape()[1], cout = w.shape()[2];
        const bool want_dx = needs[n.inputs[0]];
        Tensor& dw = grad_of(n.inputs[1]);
        Tensor& db = grad_of(n.inputs[2]);
        add_column_sums(dy, db);
        Tensor shifted;
        for (std::size_t j = 0; j < taps; ++j) {
          const Tensor* tap_grad = &dy;
          if (j * n.dilation != 0) {
            if (shifted.size() == 0) {
              shifted = Tensor::matrix(dy.rows(), cout);
            } else {
              shifted.fill(0.0);
            }
            shifted_accumulate(dy, shifted, n.seq_len, j * n.dilation, false);
            tap_grad = &shifted;
          }
          ConstMatMap wj(w.data() + j * cin * cout, static_cast<Eigen::Index>(cin),
                         static_cast<Eigen::Index>(cout));
          MatMap dwj(dw.data() + j * cin * cout, static_cast<Eigen::Index>(cin),
                     static_cast<Eigen::Index>(cout));
          dwj.noalias() += as_matrix(x).transpose() * as_matrix(*tap_grad);
          if (want_dx) as_matrix(grad_of(n.inputs[0])).noalias() += as_matrix(*tap_grad) * wj.transpose();
        }
        break;
      }
      case OpKind::kRelu: {
        const Tensor& x = forward.value(n.inputs[0]);
        Tensor& dx = grad_of(n.inputs[0]);
        for (std::size_t e = 0; e < x.size(); ++e) {
          if (x[e] > 0.0) dx[e] += dy[e];
        }
        break;
      }
      case OpKind::kSoftmax: {
        const Tensor& y = forward.value(id);
        Tensor& dx = grad_of(n.inputs[0]);
        const std::size_t stride = y.rank() <= 1 ? y.size() : y.cols();
        const std::size_t nrows = y.size() / std::max<std::size_t>(stride, 1);
        for (std::size_t r = 0; r < nrows; ++r) {
          const std::size_t base = r * stride;
          double dot = 0.0;
          for (std::size_t c = 0; c < stride; ++c) dot += dy[base + c] * y[base + c];
          for (std::size_t c = 0; c < stride; ++c) {
            dx[base + c] += y[base + c] * (dy[base + c] - dot);
          }
        }
        break;
      }
      case OpKind::kConcat: {
        std::size_t offset = 0;
        for (NodeId in : n.inputs) {
          Tensor& dpart = grad_of(in);
          const std::size_t width = dpart.cols();
          as_matrix(dpart) += as_matrix(dy).middleCols(static_cast<Eigen::Index>(offset),
                                                       static_cast<Eigen::Index>(width));
          offset += width;
        }
        break;
      }
      case OpKind::kSum:
      case OpKind::kMean: {
        Tensor& dx = grad_of(n.inputs[0]);
        double scale = dy[0];
        if (n.kind == OpKind::kMean) scale /= static_cast<double>(dx.size());
        for (double& e : dx.values()) e += scale;
        break;
      }
      case OpKind::kSparseMatMul: {
        if (!needs[n.inputs[0]]) break;
        const CsrMatrix& s = *n.matrix;
        Tensor& dx = grad_of(n.inputs[0]);
        const std::size_t cols = dx.cols();
        for (std::size_t i = 0; i < s.rows; ++i) {
          const double* src = dy.data() + i * cols;
          for (std::size_t p = s.row_ptr[i]; p < s.row_ptr[i + 1]; ++p) {
            const double a = s.values[p];
            double* dst = dx.data() + s.col_idx[p] * cols;
            for (std::size_t c = 0; c < cols; ++c) dst[c] += a * src[c];
          }
        }
        break;
      }
      case OpKind::kWeightedSum: {
        const Tensor& w = forward.value(n.inputs[0]);
        Tensor& dw = grad_of(n.inputs[0]);
        for (std::size_t r = 0; r + 1 < n.inputs.size(); ++r) {
          const Tensor& part = forward.value(n.inputs[r + 1]);
          dw[r] += ordered_dot(dy, part);
          Tensor& dpart = grad_of(n.inputs[r + 1]);
          as_matrix(dpart, 1, dpart.size()) += w[r] * as_matrix(dy, 1, dy.size());
        }
        break;
      }
      case OpKind::kPinball: {
        const Tensor& x = forward.value(n.inputs[0]);
        const PinballTargets& pt = *n.pinball;
        const std::size_t cols = x.cols(), nq = pt.column_quantiles.size();
        Tensor& dx = grad_of(n.inputs[0]);
        for (std::size_t e = 0; e < x.size(); ++e) {
          if (pt.mask[e] == 0.0) continue;
          dx[e] += dy[e] * pt.mask[e] *
                   pinball_slope(pt.targets[e], x[e], pt.column_quantiles[(e % cols) % nq]);
        }
        break;
      }
    }
  }
}

}  // namespace geann::numeric
