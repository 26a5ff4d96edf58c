#include "geann/graph/sparse_graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <unordered_set>

#include "geann/util/text.hpp"

namespace geann::graph {

namespace {

bool edge_order(const Edge& a, const Edge& b) {
  return a.dst != b.dst ? a.dst < b.dst : a.src < b.src;
}

std::uint64_t pair_key(NodeId src, NodeId dst) {
  return (static_cast<std::uint64_t>(src) << 32) | dst;
}

}  // namespace

SparseGraph::SparseGraph(std::size_t num_nodes, std::vector<Edge> edges)
    : num_nodes_(num_nodes), edges_(std::move(edges)) {
  for (const Edge& e : edges_) {
    if (e.src >= num_nodes_ || e.dst >= num_nodes_) {
      throw std::invalid_argument("edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                                  ") out of range for " + std::to_string(num_nodes_) + " nodes");
    }
    if (!std::isfinite(e.weight) || e.weight < 0.0) {
      throw std::invalid_argument("edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                                  ") has invalid weight");
    }
  }
  std::sort(edges_.begin(), edges_.end(), edge_order);
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (edges_[i].src == edges_[i - 1].src && edges_[i].dst == edges_[i - 1].dst) {
      throw std::invalid_argument("duplicate edge (" + std::to_string(edges_[i].src) + "," +
                                  std::to_string(edges_[i].dst) + ")");
    }
  }
  in_offsets_.assign(num_nodes_ + 1, 0);
  for (const Edge& e : edges_) ++in_offsets_[e.dst + 1];
  for (std::size_t v = 0; v < num_nodes_; ++v) in_offsets_[v + 1] += in_offsets_[v];
}

std::size_t SparseGraph::max_in_degree() const noexcept {
  std::size_t best = 0;
  for (std::size_t v = 0; v < num_nodes_; ++v) {
    best = std::max(best, in_offsets_[v + 1] - in_offsets_[v]);
  }
  return best;
}

double SparseGraph::in_weight(NodeId v) const {
  double total = 0.0;
  for (const Edge* e = in_begin(v); e != in_end(v); ++e) total += e->weight;
  return total;
}

SparseGraph load_edge_list(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t num_nodes = 0;
  bool have_header = false;
  std::vector<Edge> edges;
  std::unordered_set<std::uint64_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    util::strip_cr(line);
    if (util::trim(line).empty()) continue;
    if (!have_header) {
      if (!util::parse_size(util::trim(line), num_nodes)) {
        throw ParseError(line_no, "expected node count, got '" + line + "'");
      }
      have_header = true;
      continue;
    }
    const auto fields = util::split(line, ',');
    std::size_t src = 0, dst = 0;
    double w = 0.0;
    if (fields.size() != 3 || !util::parse_size(util::trim(fields[0]), src) ||
        !util::parse_size(util::trim(fields[1]), dst) ||
        !util::parse_double(util::trim(fields[2]), w)) {
      throw ParseError(line_no, "malformed edge row '" + line + "'");
    }
    if (src >= num_nodes || dst >= num_nodes) {
      throw ParseError(line_no, "node id out of range [0," + std::to_string(num_nodes) + ")");
    }
    if (!std::isfinite(w) || w < 0.0) throw ParseError(line_no, "negative or non-finite weight");
    if (!seen.insert(pair_key(static_cast<NodeId>(src), static_cast<NodeId>(dst))).second) {
      throw ParseError(line_no, "duplicate edge (" + std::to_string(src) + "," +
                                    std::to_string(dst) + ")");
    }
    edges.push_back({static_cast<NodeId>(src), static_cast<NodeId>(dst), w});
  }
  if (!have_header) throw ParseError(line_no == 0 ? 1 : line_no, "missing node count header");
  return SparseGraph(num_nodes, std::move(edges));
}

SparseGraph load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list: " + path);
  return load_edge_list(in);
}

void write_edge_list(std::ostream& out, const SparseGraph& g) {
  out << g.num_nodes() << '\n';
  for (const Edge& e : g.edges()) {
    out << e.src << ',' << e.dst << ',' << util::format_double(e.weight) << '\n';
  }
}

void write_edge_list_file(const std::string& path, const SparseGraph& g) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write edge list: " + path);
  write_edge_list(out, g);
}

SparseGraph top_k_sparsify(const SparseGraph& g, std::size_t k) {
  if (k == 0) throw std::invalid_argument("top_k_sparsify: k must be >= 1");
  std::vector<Edge> kept;
  kept.reserve(std::min(g.num_edges(), g.num_nodes() * k));
  std::vector<Edge> scratch;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    scratch.assign(g.in_begin(v), g.in_end(v));
    if (scratch.size() > k) {
      std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k),
                        scratch.end(), [](const Edge& a, const Edge& b) {
                          return a.weight != b.weight ? a.weight > b.weight : a.src < b.src;
                        });
      scratch.resize(k);
    }
    kept.insert(kept.end(), scratch.begin(), scratch.end());
  }
  return SparseGraph(g.num_nodes(), std::move(kept));
}

SubgraphBatch hop_subgraph(const SparseGraph& g, const std::vector<NodeId>& seeds,
                           std::size_t hops) {
  if (seeds.empty()) throw std::invalid_argument("hop_subgraph: empty seed set");
  SubgraphBatch batch;
  batch.hops = hops;
  batch.seeds = seeds;
  std::vector<std::size_t> depth;
  for (NodeId s : seeds) {
    if (s >= g.num_nodes()) {
      throw std::out_of_range("hop_subgraph: seed " + std::to_string(s) + " out of range");
    }
    if (!batch.local_index.emplace(s, batch.extended.size()).second) {
      throw std::invalid_argument("hop_subgraph: duplicate seed " + std::to_string(s));
    }
    batch.extended.push_back(s);
    depth.push_back(0);
  }
  // Breadth-first over reversed edges: a node's sources feed it.
  for (std::size_t head = 0; head < batch.extended.size(); ++head) {
    const NodeId v = batch.extended[head];
    const std::size_t d = depth[head];
    if (d >= hops) continue;
    for (const Edge* e = g.in_begin(v); e != g.in_end(v); ++e) {
      batch.induced_edges.push_back(*e);
      if (batch.local_index.emplace(e->src, batch.extended.size()).second) {
        batch.extended.push_back(e->src);
        depth.push_back(d + 1);
      }
    }
  }
  std::sort(batch.induced_edges.begin(), batch.induced_edges.end(), edge_order);
  batch.in_weight.reserve(batch.extended.size());
  for (NodeId v : batch.extended) batch.in_weight.push_back(g.in_weight(v));
  return batch;
}

SparseGraph identity_graph(std::size_t n) {
  if (n == 0) throw std::invalid_argument("identity_graph: n must be >= 1");
  std::vector<Edge> edges;
  edges.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(i), 1.0});
  }
  return SparseGraph(n, std::move(edges));
}

SparseGraph random_graph(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k == 0 || k >= n) {
    throw std::invalid_argument("random_graph: need 1 <= k < n (k=" + std::to_string(k) +
                                ", n=" + std::to_string(n) + ")");
  }
  std::vector<Edge> edges;
  edges.reserve(n * k);
  std::set<std::size_t> picked;
  for (std::size_t v = 0; v < n; ++v) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + v);
    // Floyd's sampling of k distinct values from [0, n-1), shifted past v.
    picked.clear();
    for (std::size_t j = n - 1 - k; j < n - 1; ++j) {
      std::uniform_int_distribution<std::size_t> dist(0, j);
      const std::size_t t = dist(rng);
      if (!picked.insert(t).second) picked.insert(j);
    }
    for (std::size_t u : picked) {
      const std::size_t src = u >= v ? u + 1 : u;
      edges.push_back({static_cast<NodeId>(src), static_cast<NodeId>(v), 1.0});
    }
  }
  return SparseGraph(n, std::move(edges));
}

}  // namespace geann::graph
