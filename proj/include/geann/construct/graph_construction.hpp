#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "geann/graph/sparse_graph.hpp"
#include "geann/numeric/tensor.hpp"

namespace geann::construct {

using graph::NodeId;
using graph::SparseGraph;

/// Row i is the flattened pretrained embedding trajectory of series i.
using EmbeddingMatrix = numeric::Tensor;

/// attributes[v] is the sorted, de-duplicated attribute set of node v.
struct AttributeMembership {
  std::vector<std::vector<std::uint32_t>> attributes;

  std::size_t num_nodes() const noexcept { return attributes.size(); }
};

/// One map per run: node -> ordered nearest-neighbour list.
using NeighborRuns = std::vector<std::map<NodeId, std::vector<NodeId>>>;

/// k in-edges per node from the rows with the largest |Pearson correlation|;
/// weight is the absolute correlation, ties broken by ascending id.
/// Throws std::invalid_argument on k >= N or a zero-variance row.
SparseGraph pearson_knn_graph(const EmbeddingMatrix& embeddings, std::size_t k);

/// |Pearson correlation| between two equal-length vectors.
double abs_pearson(const double* a, const double* b, std::size_t len);

/// weight(j -> i) = number of attributes shared by i and j; top-k per node.
SparseGraph cooccurrence_graph(const AttributeMembership& members, std::size_t n, std::size_t k);

/// Reads "node_id,attribute_id" rows; ids must be < n.
AttributeMembership load_memberships(std::istream& in, std::size_t n);
void write_memberships(std::ostream& out, const AttributeMembership& members);

/// Headerless CSV, one row of comma-separated values per node.
void write_embeddings(std::ostream& out, const EmbeddingMatrix& embeddings);
/// Throws graph::ParseError on ragged rows or non-numeric fields.
EmbeddingMatrix load_embeddings(std::istream& in);

/// Neighbour lists from in-edges ordered by weight desc, then src asc.
std::map<NodeId, std::vector<NodeId>> neighbor_lists(const SparseGraph& g);

/// |intersection over runs of node's neighbour sets| / k.
double knn_stability(const NeighborRuns& runs, NodeId node, std::size_t k);

struct BaselineEstimate {
  double mean = 0.0;
  double std = 0.0;  // sample std of per-trial stabilities
  std::size_t trials = 0;
  double standard_error() const;
};

/// Monte-Carlo stability of uniformly random k-subsets of n across num_runs runs.
BaselineEstimate random_stability_baseline(std::size_t n, std::size_t k, std::size_t num_runs,
                                           std::size_t trials, std::uint64_t seed);

/// Closed form (k/n)^(num_runs-1) for independent uniform draws.
double expected_random_stability(std::size_t n, std::size_t k, std::size_t num_runs);

struct NeighborScore {
  NodeId node;
  double mean;
  double std;  // population std
};

/// Mean/std of each node's top-k in-edge weights; nodes without in-edges are omitted.
std::vector<NeighborScore> neighbor_score_stats(const SparseGraph& g, std::size_t k);
void write_neighbor_scores(std::ostream& out, const std::vector<NeighborScore>& rows);

}  // namespace geann::construct
