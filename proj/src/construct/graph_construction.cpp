#include "geann/construct/graph_construction.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>

#include "geann/util/parallel.hpp"
#include "geann/util/text.hpp"

namespace geann::construct {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Candidate {
  double score;
  NodeId id;
};

bool better(const Candidate& a, const Candidate& b) {
  return a.score != b.score ? a.score > b.score : a.id < b.id;
}

// Rows centred and scaled to unit norm, so dot products are correlations.
RowMatrix standardized_rows(const EmbeddingMatrix& emb) {
  const std::size_t n = emb.rows(), d = emb.cols();
  RowMatrix z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = emb.data() + i * d;
    double mean = 0.0, sq = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      mean += row[c];
      sq += row[c] * row[c];
    }
    mean /= static_cast<double>(d);
    double ss = 0.0;
    for (std::size_t c = 0; c < d; ++c) ss += (row[c] - mean) * (row[c] - mean);
    if (!(ss > 1e-24 * std::max(1.0, sq))) {
      throw std::invalid_argument("pearson_knn_graph: row " + std::to_string(i) +
                                  " has zero variance; correlation undefined");
    }
    const double inv = 1.0 / std::sqrt(ss);
    for (std::size_t c = 0; c < d; ++c) {
      z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = (row[c] - mean) * inv;
    }
  }
  return z;
}

std::vector<NodeId> draw_subset(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::set<std::size_t> picked;
  for (std::size_t j = n - k; j < n; ++j) {
    std::uniform_int_distribution<std::size_t> dist(0, j);
    const std::size_t t = dist(rng);
    if (!picked.insert(t).second) picked.insert(j);
  }
  return {picked.begin(), picked.end()};
}

}  // namespace

double abs_pearson(const double* a, const double* b, std::size_t len) {
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(len);
  mb /= static_cast<double>(len);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return std::min(1.0, std::abs(sab) / std::sqrt(saa * sbb));
}

SparseGraph pearson_knn_graph(const EmbeddingMatrix& embeddings, std::size_t k) {
  const std::size_t n = embeddings.rows();
  if (n < 2) throw std::invalid_argument("pearson_knn_graph: need at least 2 rows");
  if (k == 0 || k >= n) {
    throw std::invalid_argument("pearson_knn_graph: need 1 <= k < N (k=" + std::to_string(k) +
                                ", N=" + std::to_string(n) + ")");
  }
  const RowMatrix z = standardized_rows(embeddings);

  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<std::vector<graph::Edge>> per_block(blocks);
  util::parallel_for(blocks, [&](std::size_t b) {
    const std::size_t lo = b * kBlock, hi = std::min(n, lo + kBlock);
    const RowMatrix corr = z.middleRows(static_cast<Eigen::Index>(lo),
                                        static_cast<Eigen::Index>(hi - lo)) *
                           z.transpose();
    std::vector<Candidate> cand;
    cand.reserve(n - 1);
    for (std::size_t i = lo; i < hi; ++i) {
      cand.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double c = std::min(1.0, std::abs(corr(static_cast<Eigen::Index>(i - lo),
                                                     static_cast<Eigen::Index>(j))));
        cand.push_back({c, static_cast<NodeId>(j)});
      }
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                        better);
      for (std::size_t r = 0; r < k; ++r) {
        per_block[b].push_back({cand[r].id, static_cast<NodeId>(i), cand[r].score});
      }
    }
  });
  std::vector<graph::Edge> edges;
  edges.reserve(n * k);
  for (auto& part : per_block) edges.insert(edges.end(), part.begin(), part.end());
  return SparseGraph(n, std::move(edges));
}

SparseGraph cooccurrence_graph(const AttributeMembership& members, std::size_t n, std::size_t k) {
  if (k == 0) throw std::invalid_argument("cooccurrence_graph: k must be >= 1");
  if (members.num_nodes() > n) {
    throw std::invalid_argument("cooccurrence_graph: membership covers " +
                                std::to_string(members.num_nodes()) + " nodes, n=" +
                                std::to_string(n));
  }
  std::map<std::uint32_t, std::vector<NodeId>> holders;
  for (std::size_t v = 0; v < members.num_nodes(); ++v) {
    for (std::uint32_t a : members.attributes[v]) holders[a].push_back(static_cast<NodeId>(v));
  }
  std::vector<graph::Edge> edges;
  std::vector<double> counts(n, 0.0);
  std::vector<NodeId> touched;
  std::vector<Candidate> cand;
  for (std::size_t i = 0; i < members.num_nodes(); ++i) {
    touched.clear();
    for (std::uint32_t a : members.attributes[i]) {
      for (NodeId j : holders[a]) {
        if (j == i) continue;
        if (counts[j] == 0.0) touched.push_back(j);
        counts[j] += 1.0;
      }
    }
    cand.clear();
    for (NodeId j : touched) {
      cand.push_back({counts[j], j});
      counts[j] = 0.0;
    }
    const std::size_t keep = std::min(k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(),
                      better);
    for (std::size_t r = 0; r < keep; ++r) {
      edges.push_back({cand[r].id, static_cast<NodeId>(i), cand[r].score});
    }
  }
  return SparseGraph(n, std::move(edges));
}

AttributeMembership load_memberships(std::istream& in, std::size_t n) {
  AttributeMembership m;
  m.attributes.resize(n);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    util::strip_cr(line);
    if (util::trim(line).empty()) continue;
    const auto f = util::split(line, ',');
    std::size_t node = 0, attr = 0;
    if (f.size() != 2 || !util::parse_size(util::trim(f[0]), node) ||
        !util::parse_size(util::trim(f[1]), attr)) {
      throw graph::ParseError(line_no, "malformed membership row '" + line + "'");
    }
    if (node >= n) throw graph::ParseError(line_no, "node id out of range");
    m.attributes[node].push_back(static_cast<std::uint32_t>(attr));
  }
  for (auto& attrs : m.attributes) {
    std::sort(attrs.begin(), attrs.end());
    attrs.erase(std::unique(attrs.begin(), attrs.end()), attrs.end());
  }
  return m;
}

void write_memberships(std::ostream& out, const AttributeMembership& members) {
  for (std::size_t v = 0; v < members.num_nodes(); ++v) {
    for (std::uint32_t a : members.attributes[v]) out << v << ',' << a << '\n';
  }
}

void write_embeddings(std::ostream& out, const EmbeddingMatrix& embeddings) {
  const std::size_t cols = embeddings.cols();
  for (std::size_t r = 0; r < embeddings.rows(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) out << ',';
      out << util::format_double(embeddings(r, c));
    }
    out << '\n';
  }
}

EmbeddingMatrix load_embeddings(std::istream& in) {
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    util::strip_cr(line);
    if (util::trim(line).empty()) continue;
    const auto f = util::split(line, ',');
    if (rows == 0) cols = f.size();
    if (f.size() != cols) {
      throw graph::ParseError(line_no, "expected " + std::to_string(cols) + " values, got " +
                                           std::to_string(f.size()));
    }
    for (auto field : f) {
      double v = 0.0;
      if (!util::parse_double(util::trim(field), v)) {
        throw graph::ParseError(line_no, "non-numeric value '" + std::string(field) + "'");
      }
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw graph::ParseError(line_no, "no embedding rows");
  return numeric::Tensor({rows, cols}, std::move(values));
}

std::map<NodeId, std::vector<NodeId>> neighbor_lists(const SparseGraph& g) {
  std::map<NodeId, std::vector<NodeId>> out;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    std::vector<graph::Edge> in(g.in_begin(v), g.in_end(v));
    std::stable_sort(in.begin(), in.end(), [](const graph::Edge& a, const graph::Edge& b) {
      return a.weight != b.weight ? a.weight > b.weight : a.src < b.src;
    });
    auto& list = out[v];
    for (const auto& e : in) list.push_back(e.src);
  }
  return out;
}

double knn_stability(const NeighborRuns& runs, NodeId node, std::size_t k) {
  if (runs.empty()) throw std::invalid_argument("knn_stability: no runs");
  if (k == 0) throw std::invalid_argument("knn_stability: k must be >= 1");
  std::vector<NodeId> common;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    auto it = runs[r].find(node);
    if (it == runs[r].end()) {
      throw std::invalid_argument("knn_stability: node " + std::to_string(node) +
                                  " missing from run " + std::to_string(r));
    }
    if (it->second.size() != k) {
      throw std::invalid_argument("knn_stability: node " + std::to_string(node) + " has " +
                                  std::to_string(it->second.size()) + " neighbours in run " +
                                  std::to_string(r) + ", expected " + std::to_string(k));
    }
    std::vector<NodeId> ids = it->second;
    std::sort(ids.begin(), ids.end());
    if (r == 0) {
      common = std::move(ids);
    } else {
      std::vector<NodeId> next;
      std::set_intersection(common.begin(), common.end(), ids.begin(), ids.end(),
                            std::back_inserter(next));
      common = std::move(next);
    }
  }
  return static_cast<double>(common.size()) / static_cast<double>(k);
}

double BaselineEstimate::standard_error() const {
  return trials > 0 ? std / std::sqrt(static_cast<double>(trials)) : 0.0;
}

BaselineEstimate random_stability_baseline(std::size_t n, std::size_t k, std::size_t num_runs,
                                           std::size_t trials, std::uint64_t seed) {
  if (k == 0 || k > n) throw std::invalid_argument("random_stability_baseline: need 1 <= k <= n");
  if (num_runs == 0 || trials == 0) {
    throw std::invalid_argument("random_stability_baseline: need runs >= 1 and trials >= 1");
  }
  std::mt19937_64 rng(seed);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<NodeId> common = draw_subset(n, k, rng);
    for (std::size_t r = 1; r < num_runs; ++r) {
      const std::vector<NodeId> next = draw_subset(n, k, rng);
      std::vector<NodeId> both;
      std::set_intersection(common.begin(), common.end(), next.begin(), next.end(),
                            std::back_inserter(both));
      common = std::move(both);
    }
    const double s = static_cast<double>(common.size()) / static_cast<double>(k);
    sum += s;
    sum_sq += s * s;
  }
  BaselineEstimate est;
  est.trials = trials;
  est.mean = sum / static_cast<double>(trials);
  if (trials > 1) {
    const double var = (sum_sq - static_cast<double>(trials) * est.mean * est.mean) /
                       static_cast<double>(trials - 1);
    est.std = std::sqrt(std::max(0.0, var));
  }
  return est;
}

double expected_random_stability(std::size_t n, std::size_t k, std::size_t num_runs) {
  return std::pow(static_cast<double>(k) / static_cast<double>(n),
                  static_cast<double>(num_runs) - 1.0);
}

std::vector<NeighborScore> neighbor_score_stats(const SparseGraph& g, std::size_t k) {
  if (k == 0) throw std::invalid_argument("neighbor_score_stats: k must be >= 1");
  std::vector<NeighborScore> out;
  std::vector<double> w;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (g.in_degree(v) == 0) continue;
    w.clear();
    for (const auto* e = g.in_begin(v); e != g.in_end(v); ++e) w.push_back(e->weight);
    std::sort(w.begin(), w.end(), std::greater<>());
    if (w.size() > k) w.resize(k);
    double mean = 0.0;
    for (double x : w) mean += x;
    mean /= static_cast<double>(w.size());
    double var = 0.0;
    for (double x : w) var += (x - mean) * (x - mean);
    var /= static_cast<double>(w.size());
    out.push_back({v, mean, std::sqrt(var)});
  }
  return out;
}

void write_neighbor_scores(std::ostream& out, const std::vector<NeighborScore>& rows) {
  out << "node,mean,std\n";
  for (const auto& r : rows) {
    out << r.node << ',' << util::format_double(r.mean) << ',' << util::format_double(r.std)
        << '\n';
  }
}

}  // namespace geann::construct
