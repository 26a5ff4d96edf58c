#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "geann/forecast/dataset.hpp"
#include "geann/forecast/loss.hpp"
#include "geann/forecast/model.hpp"
#include "geann/graph/sparse_graph.hpp"
#include "geann/train/optimizer.hpp"

namespace geann::train {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 256;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  /// Neighbourhood cap every graph must respect (max in-degree).
  std::size_t top_k = 10;
  /// Exclusive end of the training window; 0 means the whole series.
  std::size_t train_end = 0;
  /// Trailing share of the training window held out for validation.
  double validation_fraction = 0.2;
  /// Creation times per batch on a strided grid; 0 enumerates all of them.
  std::size_t creation_times_per_batch = 8;
};

/// Epochs and batches are numbered from 1.
struct LogEntry {
  std::size_t epoch;
  std::size_t batch;
  double loss;
};

struct TrainResult {
  forecast::ParameterStore params;
  std::vector<LogEntry> log;
  /// Per epoch: summed batch loss divided by the number of loss terms.
  std::vector<double> epoch_loss;
  /// Overall weighted QL on the held-out validation window (NaN if empty).
  double validation_wql = 0.0;
};

/// Shuffled (seeded) partition of [0, n) into consecutive batches of m.
std::vector<std::vector<graph::NodeId>> partition_batches(std::size_t n, std::size_t m,
                                                          std::uint64_t seed);

/// Strided creation-time grid over [first, last] with a seeded phase.
std::vector<std::size_t> creation_time_grid(std::size_t first, std::size_t last,
                                            std::size_t count, std::uint64_t seed);

/// Mini-batch GEANN training: per batch, extract each graph's L-hop subgraph
/// around the seeds, run the forward program, back-propagate the summed
/// quantile loss and take one optimizer step. Deterministic given the seed.
/// Throws std::runtime_error naming epoch and batch on a non-finite loss.
TrainResult train(const forecast::TimeSeriesDataset& ds,
                  const std::vector<graph::SparseGraph>& graphs, const TrainConfig& cfg,
                  const forecast::ModelConfig& model);

void write_train_log(std::ostream& out, const std::vector<LogEntry>& log);

// --- evaluation -------------------------------------------------------------

using SegmentFilter = std::function<bool(std::size_t series, std::size_t creation_time)>;

struct Segment {
  std::string name;
  SegmentFilter filter;
};

struct SegmentReport {
  std::string name;
  std::vector<double> per_quantile;  // aligned with dataset quantiles
  double overall = 0.0;              // mean over quantiles
};

struct EvalReport {
  std::vector<double> quantiles;
  std::vector<SegmentReport> segments;

  const SegmentReport& segment(const std::string& name) const;
};

/// Per quantile: sum of L_q(d, f) over the admitted (i, t, h) divided by the
/// sum of d over the same set. Targets must be observed; creation times in
/// `forecasts` define the index set. Throws std::domain_error if sum d == 0.
SegmentReport weighted_quantile_loss(const forecast::TimeSeriesDataset& ds,
                                     const forecast::QuantileForecast& forecasts,
                                     const Segment& segment);

/// Forecasts every series at creation times [split_begin, split_end) and
/// reports weighted QL per segment ("all" is always first).
EvalReport evaluate_weighted_ql(const forecast::TimeSeriesDataset& ds,
                                const forecast::ModelConfig& model,
                                const forecast::ParameterStore& params,
                                const std::vector<graph::SparseGraph>& graphs,
                                std::size_t split_begin, std::size_t split_end,
                                const std::vector<Segment>& extra_segments = {});

/// CSV "segment,quantile,weighted_ql"; the overall row uses quantile "overall".
void write_eval_report(std::ostream& out, const EvalReport& report);

}  // namespace geann::train
