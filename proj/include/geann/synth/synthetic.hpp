#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "geann/construct/graph_construction.hpp"
#include "geann/forecast/dataset.hpp"
#include "geann/forecast/model.hpp"
#include "geann/graph/sparse_graph.hpp"
#include "geann/train/trainer.hpp"
#include "geann/util/config.hpp"

namespace geann::synth {

/// Clustered demand panel parameters.
///
/// Covariates: channel 0 is the launch indicator (1 once a series is on
/// sale), channel 1 the stock-out indicator. Statics: a noisy reading of the
/// series scale and an uninformative uniform draw.
struct SyntheticSpec {
  std::size_t num_series = 2000;
  std::size_t length = 120;
  std::size_t num_clusters = 40;
  double cold_start_fraction = 0.1;
  double oos_fraction = 0.1;
  double noise_scale = 0.3;
  /// Per-series scale is drawn from U[1 - scale_spread, 1 + scale_spread].
  double scale_spread = 0.2;
  std::uint64_t seed = 0;

  std::size_t context_length = 16;
  std::vector<std::size_t> horizons{1, 2, 3, 4};
  std::vector<double> quantiles{0.5, 0.9};
  /// End of the training window (0 = length). Launches fall in its last 30%.
  std::size_t train_end = 96;
  /// In-degree of every node in the truth graph.
  std::size_t truth_k = 10;

  std::size_t effective_train_end() const noexcept { return train_end == 0 ? length : train_end; }
  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;

  /// Keys: num_series, length, num_clusters, cold_start_fraction,
  /// oos_fraction, noise_scale, scale_spread, seed, context_length, horizons, quantiles,
  /// train_end, truth_k. Unknown keys throw util::ConfigError.
  static SyntheticSpec from_config(const util::KeyValueConfig& kv);
  std::string to_text() const;
};

enum class SeriesKind { kNormal, kColdStart, kOutOfStock };

/// kColdStart: start = end = launch time. kOutOfStock: window [start, end).
struct SeriesLabel {
  SeriesKind kind = SeriesKind::kNormal;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const SeriesLabel&, const SeriesLabel&) = default;
};

struct SyntheticBundle {
  forecast::TimeSeriesDataset dataset;
  graph::SparseGraph truth_graph;
  construct::AttributeMembership memberships;
  std::vector<SeriesLabel> labels;
  std::vector<std::uint32_t> cluster;
};

/// Deterministic given spec.seed; series i draws from a stream derived from
/// (seed, i), cluster c from (seed, c).
SyntheticBundle generate(const SyntheticSpec& spec);

/// CSV "series,kind,start,end" with kind normal | cold_start | oos.
void write_labels(std::ostream& out, const std::vector<SeriesLabel>& labels);
std::vector<SeriesLabel> load_labels(std::istream& in, std::size_t n);

/// Creation times whose context window reaches back to or before the launch.
train::Segment cold_start_segment(const std::vector<SeriesLabel>& labels, std::size_t context);
/// Creation times after a stock-out whose context window overlaps it.
train::Segment oos_segment(const std::vector<SeriesLabel>& labels, std::size_t context);
std::vector<train::Segment> standard_segments(const std::vector<SeriesLabel>& labels,
                                              std::size_t context);

/// Encoder states at creation times [first, last], flattened per series:
/// row i = (H_first[i], H_first+1[i], ...), width d_Enc * (last - first + 1).
construct::EmbeddingMatrix encoder_trajectory(const forecast::TimeSeriesDataset& ds,
                                              const forecast::ModelConfig& cfg,
                                              const forecast::ParameterStore& params,
                                              std::size_t first, std::size_t last);

struct Pretrained {
  forecast::ParameterStore params;
  construct::EmbeddingMatrix embeddings;
};

/// Trains the graph-free model and returns its encoder trajectory over the
/// creation times [C, train_end].
Pretrained pretrain_embeddings(const forecast::TimeSeriesDataset& ds,
                               const forecast::ModelConfig& cfg, const train::TrainConfig& tc);

}  // namespace geann::synth
