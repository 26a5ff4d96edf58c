#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "geann/forecast/dataset.hpp"
#include "geann/graph/sparse_graph.hpp"
#include "geann/numeric/compute_graph.hpp"
#include "geann/numeric/parameters.hpp"

namespace geann::forecast {

using numeric::ComputeGraph;
using numeric::CsrMatrix;
using numeric::NodeId;
using numeric::ParameterStore;
using numeric::Tensor;

/// Stack of dilated causal convolutions (ReLU) followed by a linear read-out.
struct EncoderConfig {
  std::size_t kernel_size = 2;
  std::vector<std::size_t> dilations{1, 2, 4};
  std::vector<std::size_t> channels{8, 8, 8};
  std::size_t output_width = 8;

  std::size_t receptive_field() const;
  void validate(std::size_t context_length) const;
};

/// R parallel L-layer GCN stacks combined with softmax(logits) weights.
/// num_graphs == 0 disables the module (graph-free baseline).
struct GemConfig {
  std::size_t num_graphs = 1;
  std::size_t layers = 2;
  std::size_t hidden_width = 32;
  std::size_t output_width = 8;

  void validate() const;
};

struct ModelConfig {
  EncoderConfig encoder;
  GemConfig gem;
  std::size_t static_width = 4;
  std::size_t decoder_hidden = 32;

  // Derived from the dataset.
  std::size_t input_channels = 1;  // target + d covariates
  std::size_t static_inputs = 0;
  std::size_t num_horizons = 1;
  std::size_t num_quantiles = 2;

  bool uses_graphs() const noexcept { return gem.num_graphs > 0; }
  std::size_t gem_width() const noexcept { return uses_graphs() ? gem.output_width : 0; }
  std::size_t decoder_input_width() const noexcept {
    return encoder.output_width + gem_width() + static_width;
  }
  std::size_t output_width() const noexcept { return num_horizons * num_quantiles; }

  /// Copies the dataset-derived fields and validates.
  void bind(const TimeSeriesDataset& ds);
  void validate(std::size_t context_length) const;

  /// Flat key=value text (same keys as the CLI config files).
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);
};

/// Glorot-uniform weights, zero biases, zero ensemble logits.
ParameterStore init_parameters(const ModelConfig& cfg, std::uint64_t seed);

std::string gcn_weight_name(std::size_t graph, std::size_t layer);

// --- graph builders -------------------------------------------------------

/// `sequences` holds B sequences of `seq_len` rows with `input_channels`
/// columns; output has the same row layout and `output_width` columns.
NodeId add_temporal_encoder(ComputeGraph& g, NodeId sequences, std::size_t seq_len,
                            const ModelConfig& cfg);
NodeId add_static_encoder(ComputeGraph& g, NodeId statics, const ModelConfig& cfg);
/// L GCN layers for graph r: rectifier between layers, identity on the last.
NodeId add_gcn_stack(ComputeGraph& g, NodeId node_states, std::shared_ptr<const CsrMatrix> adjacency,
                     std::size_t graph_index, const ModelConfig& cfg);
/// Convex combination of per-graph outputs with weights softmax(gem.logits).
NodeId add_graph_ensemble(ComputeGraph& g, const std::vector<NodeId>& stack_outputs);
/// One shared hidden layer then |H|*|Q| heads; `gem_rows` may be absent for
/// graph-free models.
NodeId add_decoder(ComputeGraph& g, NodeId encoder_rows, const NodeId* gem_rows, NodeId static_rows,
                   const ModelConfig& cfg);

// --- normalised adjacency -------------------------------------------------

/// D^-1/2 (A + I) D^-1/2 with A[i][j] = weight(j -> i) and D the row sums of A + I.
CsrMatrix normalized_adjacency(const graph::SparseGraph& g);
/// Same operator restricted to a subgraph, in local indices. Degrees come from
/// the full graph so rows of nodes within L-1 hops of a seed are exact.
CsrMatrix normalized_adjacency(const graph::SubgraphBatch& batch);

// --- concrete operations --------------------------------------------------

/// Encoder state H_t (N x d_Enc) from the window [t-C, t) of each series.
Tensor encode_temporal(const TimeSeriesDataset& ds, std::size_t t, const ParameterStore& params,
                       const ModelConfig& cfg);
Tensor encode_static(const Tensor& statics, const ParameterStore& params, const ModelConfig& cfg);

/// sigma(A_hat H W); sigma is the rectifier unless `final_layer`.
Tensor gcn_layer(const Tensor& node_states, const graph::SparseGraph& g, const Tensor& weight,
                 bool final_layer);
/// Same over a subgraph; `node_states` rows follow `batch.extended`.
Tensor gcn_layer(const Tensor& node_states, const graph::SubgraphBatch& batch,
                 const Tensor& weight, bool final_layer);

/// Softmax of the ensemble logits.
std::vector<double> ensemble_weights(const ParameterStore& params);

/// GEM outputs for the seed rows. `node_states` is the full N x d_Enc H_t.
/// Throws if subgraph seed lists differ or were built with a different L.
Tensor gem_forward(const Tensor& node_states, const std::vector<graph::SubgraphBatch>& subgraphs,
                   const ParameterStore& params, const ModelConfig& cfg);
/// Reference path: every stack runs over its whole graph (N x d_GNN).
Tensor gem_forward_full(const Tensor& node_states, const std::vector<graph::SparseGraph>& graphs,
                        const ParameterStore& params, const ModelConfig& cfg);

/// Forecasts for one (series, creation time): index h*|Q| + q.
std::vector<double> decode(const std::vector<double>& encoder_row,
                           const std::vector<double>& gem_row,
                           const std::vector<double>& static_row, const ParameterStore& params,
                           const ModelConfig& cfg);

}  // namespace geann::forecast
