#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geann/forecast/dataset.hpp"
#include "geann/forecast/loss.hpp"
#include "geann/forecast/model.hpp"
#include "geann/graph/sparse_graph.hpp"

namespace geann::forecast {

/// One mini-batch: seed series and the creation times they are unrolled at.
struct BatchRequest {
  std::vector<graph::NodeId> seeds;
  std::vector<std::size_t> creation_times;
  /// Targets at index >= target_end are masked out of the loss.
  std::size_t target_end = 0;
};

/// The full forward graph for one batch: temporal encoder over the union of
/// all extended node sets, GEM over each subgraph, decoder on seed rows.
/// Forecast row s * F + f belongs to seed s at creation time f.
struct BatchProgram {
  ComputeGraph graph;
  std::map<std::string, Tensor> inputs;
  NodeId forecasts = 0;
  std::optional<NodeId> loss;
  std::size_t loss_terms = 0;
};

/// `subgraphs` must hold one SubgraphBatch per graph, each seeded with
/// `request.seeds` (empty for graph-free models).
BatchProgram build_batch_program(const TimeSeriesDataset& ds, const ModelConfig& cfg,
                                 const BatchRequest& request,
                                 const std::vector<graph::SubgraphBatch>& subgraphs,
                                 bool with_loss);

/// Forecasts for `series` at every time in `creation_times`, computed in
/// chunks of `chunk` seeds over hop subgraphs of the full graphs.
QuantileForecast predict(const TimeSeriesDataset& ds, const ModelConfig& cfg,
                         const ParameterStore& params,
                         const std::vector<graph::SparseGraph>& graphs,
                         const std::vector<std::size_t>& series,
                         const std::vector<std::size_t>& creation_times, std::size_t chunk = 256);

}  // namespace geann::forecast
