#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace geann::graph {

using NodeId = std::uint32_t;

/// An edge (src, dst): dst aggregates messages from src.
struct Edge {
  NodeId src;
  NodeId dst;
  double weight;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Raised by the edge-list reader; `line()` is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& detail)
      : std::runtime_error("line " + std::to_string(line) + ": " + detail), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Immutable weighted directed graph. Edges are stored sorted by (dst, src)
/// with a CSR-style in-edge index, so in-neighborhoods are contiguous.
class SparseGraph {
 public:
  SparseGraph() = default;
  /// Validates ids, weights (finite, >= 0) and uniqueness of (src,dst).
  SparseGraph(std::size_t num_nodes, std::vector<Edge> edges);

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  /// In-edges of `v` (edges whose dst is v), ordered by src.
  const Edge* in_begin(NodeId v) const { return edges_.data() + in_offsets_[v]; }
  const Edge* in_end(NodeId v) const { return edges_.data() + in_offsets_[v + 1]; }
  std::size_t in_degree(NodeId v) const { return in_offsets_[v + 1] - in_offsets_[v]; }
  std::size_t max_in_degree() const noexcept;
  /// Sum of in-edge weights of v.
  double in_weight(NodeId v) const;

  friend bool operator==(const SparseGraph& a, const SparseGraph& b) {
    return a.num_nodes_ == b.num_nodes_ && a.edges_ == b.edges_;
  }

 private:
  std::size_t num_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> in_offsets_{0};
};

/// Node-induced neighbourhood of a mini-batch of seed nodes.
struct SubgraphBatch {
  std::vector<NodeId> seeds;
  /// Seeds first (in order), then the remaining nodes in discovery order.
  std::vector<NodeId> extended;
  std::vector<Edge> induced_edges;  // global ids
  std::unordered_map<NodeId, std::size_t> local_index;
  /// Full-graph in-weight of each extended node (aligned with `extended`);
  /// needed so that normalised aggregation matches the full graph.
  std::vector<double> in_weight;
  std::size_t hops = 0;
};

/// Reads "num_nodes\nsrc,dst,weight\n..." (see README).
SparseGraph load_edge_list(std::istream& in);
SparseGraph load_edge_list_file(const std::string& path);
/// Writes the same format; weights use round-trip precision.
void write_edge_list(std::ostream& out, const SparseGraph& g);
void write_edge_list_file(const std::string& path, const SparseGraph& g);

/// Keeps the k highest-weight in-edges of every node (ties: ascending src).
SparseGraph top_k_sparsify(const SparseGraph& g, std::size_t k);

/// L-hop reverse neighbourhood of `seeds` plus every edge that can reach a
/// seed within `hops` aggregation steps.
SubgraphBatch hop_subgraph(const SparseGraph& g, const std::vector<NodeId>& seeds,
                           std::size_t hops);

SparseGraph identity_graph(std::size_t n);

/// Each node gets k in-edges (weight 1) from distinct uniformly drawn other nodes.
SparseGraph random_graph(std::size_t n, std::size_t k, std::uint64_t seed);

}  // namespace geann::graph
