#include "geann/forecast/model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "geann/util/config.hpp"

namespace geann::forecast {

namespace {

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::map<std::string, Tensor> single_input(const std::string& name, Tensor t) {
  std::map<std::string, Tensor> m;
  m.emplace(name, std::move(t));
  return m;
}

}  // namespace

std::size_t EncoderConfig::receptive_field() const {
  std::size_t rf = 1;
  for (std::size_t d : dilations) rf += (kernel_size - 1) * d;
  return rf;
}

void EncoderConfig::validate(std::size_t context_length) const {
  if (kernel_size < 1) throw std::invalid_argument("encoder: kernel size must be >= 1");
  if (dilations.empty() || dilations.size() != channels.size()) {
    throw std::invalid_argument("encoder: need one channel width per dilation");
  }
  for (std::size_t d : dilations) {
    if (d < 1) throw std::invalid_argument("encoder: dilations must be >= 1");
  }
  for (std::size_t c : channels) {
    if (c < 1) throw std::invalid_argument("encoder: channel widths must be >= 1");
  }
  if (output_width < 1) throw std::invalid_argument("encoder: output width must be >= 1");
  if (receptive_field() > context_length) {
    throw std::invalid_argument("encoder: receptive field " + std::to_string(receptive_field()) +
                                " exceeds context length " + std::to_string(context_length));
  }
}

void GemConfig::validate() const {
  if (num_graphs == 0) return;
  if (layers < 1) throw std::invalid_argument("gem: need at least one GCN layer");
  if (hidden_width < 1 || output_width < 1) throw std::invalid_argument("gem: widths must be >= 1");
}

void ModelConfig::bind(const TimeSeriesDataset& ds) {
  input_channels = 1 + ds.num_covariates;
  static_inputs = ds.num_static;
  num_horizons = ds.horizons.size();
  num_quantiles = ds.quantiles.size();
  validate(ds.context_length);
}

void ModelConfig::validate(std::size_t context_length) const {
  encoder.validate(context_length);
  gem.validate();
  if (static_width < 1 || decoder_hidden < 1) {
    throw std::invalid_argument("model: static and decoder widths must be >= 1");
  }
  if (num_horizons < 1 || num_quantiles < 1) {
    throw std::invalid_argument("model: need at least one horizon and quantile");
  }
}

std::string ModelConfig::to_text() const {
  std::string s;
  auto line = [&](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
  line("kernel_size", std::to_string(encoder.kernel_size));
  line("dilations", join(encoder.dilations));
  line("channels", join(encoder.channels));
  line("encoder_width", std::to_string(encoder.output_width));
  line("num_graphs", std::to_string(gem.num_graphs));
  line("gcn_layers", std::to_string(gem.layers));
  line("gcn_hidden", std::to_string(gem.hidden_width));
  line("gnn_width", std::to_string(gem.output_width));
  line("static_width", std::to_string(static_width));
  line("decoder_hidden", std::to_string(decoder_hidden));
  line("input_channels", std::to_string(input_channels));
  line("static_inputs", std::to_string(static_inputs));
  line("num_horizons", std::to_string(num_horizons));
  line("num_quantiles", std::to_string(num_quantiles));
  return s;
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  const auto kv = util::KeyValueConfig::parse(text);
  kv.require_known({"kernel_size", "dilations", "channels", "encoder_width", "num_graphs",
                    "gcn_layers", "gcn_hidden", "gnn_width", "static_width", "decoder_hidden",
                    "input_channels", "static_inputs", "num_horizons", "num_quantiles"});
  ModelConfig c;
  c.encoder.kernel_size = kv.get_size("kernel_size", c.encoder.kernel_size);
  c.encoder.dilations = kv.get_size_list("dilations", c.encoder.dilations);
  c.encoder.channels = kv.get_size_list("channels", c.encoder.channels);
  c.encoder.output_width = kv.get_size("encoder_width", c.encoder.output_width);
  c.gem.num_graphs = kv.get_size("num_graphs", c.gem.num_graphs);
  c.gem.layers = kv.get_size("gcn_layers", c.gem.layers);
  c.gem.hidden_width = kv.get_size("gcn_hidden", c.gem.hidden_width);
  c.gem.output_width = kv.get_size("gnn_width", c.gem.output_width);
  c.static_width = kv.get_size("static_width", c.static_width);
  c.decoder_hidden = kv.get_size("decoder_hidden", c.decoder_hidden);
  c.input_channels = kv.get_size("input_channels", c.input_channels);
  c.static_inputs = kv.get_size("static_inputs", c.static_inputs);
  c.num_horizons = kv.get_size("num_horizons", c.num_horizons);
  c.num_quantiles = kv.get_size("num_quantiles", c.num_quantiles);
  return c;
}

std::string gcn_weight_name(std::size_t graph, std::size_t layer) {
  return "gem.g" + std::to_string(graph) + ".l" + std::to_string(layer) + ".w";
}

ParameterStore init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  ParameterStore p(seed);
  const auto& enc = cfg.encoder;
  std::size_t in = cfg.input_channels;
  for (std::size_t l = 0; l < enc.dilations.size(); ++l) {
    const std::string base = "enc.conv" + std::to_string(l);
    const std::size_t out = enc.channels[l];
    p.add_glorot(base + ".w", {enc.kernel_size, in, out}, enc.kernel_size * in,
                 enc.kernel_size * out);
    p.add_zeros(base + ".b", {out});
    in = out;
  }
  p.add_glorot("enc.out.w", {in, enc.output_width}, in, enc.output_width);
  p.add_zeros("enc.out.b", {enc.output_width});

  p.add_glorot("static.w", {cfg.static_inputs, cfg.static_width}, cfg.static_inputs,
               cfg.static_width);
  p.add_zeros("static.b", {cfg.static_width});

  if (cfg.uses_graphs()) {
    for (std::size_t r = 0; r < cfg.gem.num_graphs; ++r) {
      std::size_t width = enc.output_width;
      for (std::size_t l = 0; l < cfg.gem.layers; ++l) {
        const std::size_t out =
            l + 1 == cfg.gem.layers ? cfg.gem.output_width : cfg.gem.hidden_width;
        p.add_glorot(gcn_weight_name(r, l), {width, out}, width, out);
        width = out;
      }
    }
    p.add_zeros("gem.logits", {cfg.gem.num_graphs});
  }

  const std::size_t dec_in = cfg.decoder_input_width();
  p.add_glorot("dec.hidden.w", {dec_in, cfg.decoder_hidden}, dec_in, cfg.decoder_hidden);
  p.add_zeros("dec.hidden.b", {cfg.decoder_hidden});
  p.add_glorot("dec.out.w", {cfg.decoder_hidden, cfg.output_width()}, cfg.decoder_hidden,
               cfg.output_width());
  p.add_zeros("dec.out.b", {cfg.output_width()});
  return p;
}

NodeId add_temporal_encoder(ComputeGraph& g, NodeId sequences, std::size_t seq_len,
                            const ModelConfig& cfg) {
  NodeId x = sequences;
  for (std::size_t l = 0; l < cfg.encoder.dilations.size(); ++l) {
    const std::string base = "enc.conv" + std::to_string(l);
    x = g.relu(g.causal_conv(x, g.param(base + ".w"), g.param(base + ".b"), seq_len,
                             cfg.encoder.dilations[l]));
  }
  return g.linear(x, g.param("enc.out.w"), g.param("enc.out.b"));
}

NodeId add_static_encoder(ComputeGraph& g, NodeId statics, const ModelConfig&) {
  return g.relu(g.linear(statics, g.param("static.w"), g.param("static.b")));
}

NodeId add_gcn_stack(ComputeGraph& g, NodeId node_states,
                     std::shared_ptr<const CsrMatrix> adjacency, std::size_t graph_index,
                     const ModelConfig& cfg) {
  NodeId x = node_states;
  for (std::size_t l = 0; l < cfg.gem.layers; ++l) {
    x = g.sparse_matmul(adjacency, g.linear(x, g.param(gcn_weight_name(graph_index, l))));
    if (l + 1 < cfg.gem.layers) x = g.relu(x);
  }
  return x;
}

NodeId add_graph_ensemble(ComputeGraph& g, const std::vector<NodeId>& stack_outputs) {
  return g.weighted_sum(g.softmax(g.param("gem.logits")), stack_outputs);
}

NodeId add_decoder(ComputeGraph& g, NodeId encoder_rows, const NodeId* gem_rows,
                   NodeId static_rows, const ModelConfig&) {
  std::vector<NodeId> parts{encoder_rows};
  if (gem_rows) parts.push_back(*gem_rows);
  parts.push_back(static_rows);
  const NodeId hidden =
      g.relu(g.linear(g.concat(parts), g.param("dec.hidden.w"), g.param("dec.hidden.b")));
  return g.linear(hidden, g.param("dec.out.w"), g.param("dec.out.b"));
}

CsrMatrix normalized_adjacency(const graph::SparseGraph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> degree(n, 1.0);
  for (graph::NodeId v = 0; v < n; ++v) degree[v] += g.in_weight(v);
  std::vector<CsrMatrix::Triplet> t;
  t.reserve(g.num_edges() + n);
  for (std::size_t v = 0; v < n; ++v) t.push_back({v, v, 1.0 / degree[v]});
  for (const auto& e : g.edges()) {
    t.push_back({e.dst, e.src, e.weight / std::sqrt(degree[e.dst] * degree[e.src])});
  }
  return CsrMatrix::from_triplets(n, n, std::move(t));
}

CsrMatrix normalized_adjacency(const graph::SubgraphBatch& batch) {
  const std::size_t n = batch.extended.size();
  std::vector<double> degree(n);
  for (std::size_t i = 0; i < n; ++i) degree[i] = 1.0 + batch.in_weight[i];
  std::vector<CsrMatrix::Triplet> t;
  t.reserve(batch.induced_edges.size() + n);
  for (std::size_t v = 0; v < n; ++v) t.push_back({v, v, 1.0 / degree[v]});
  for (const auto& e : batch.induced_edges) {
    const std::size_t dst = batch.local_index.at(e.dst);
    const std::size_t src = batch.local_index.at(e.src);
    t.push_back({dst, src, e.weight / std::sqrt(degree[dst] * degree[src])});
  }
  return CsrMatrix::from_triplets(n, n, std::move(t));
}

Tensor encode_temporal(const TimeSeriesDataset& ds, std::size_t t, const ParameterStore& params,
                       const ModelConfig& cfg) {
  const std::size_t c = ds.context_length;
  if (t < c) {
    throw std::invalid_argument("encode_temporal: creation time " + std::to_string(t) +
                                " precedes context length " + std::to_string(c));
  }
  if (t > ds.length) throw std::out_of_range("encode_temporal: creation time beyond series");
  const std::size_t ch = 1 + ds.num_covariates;
  Tensor window = Tensor::matrix(ds.num_series * c, ch);
  std::vector<std::size_t> last_rows;
  for (std::size_t i = 0; i < ds.num_series; ++i) {
    for (std::size_t p = 0; p < c; ++p) {
      const std::size_t time = t - c + p;
      window(i * c + p, 0) = ds.y(i, time);
      for (std::size_t k = 0; k < ds.num_covariates; ++k) window(i * c + p, 1 + k) = ds.x(i, time, k);
    }
    last_rows.push_back(i * c + c - 1);
  }
  ComputeGraph g;
  const NodeId seq = add_temporal_encoder(g, g.input("window"), c, cfg);
  const NodeId out = g.sparse_matmul(
      std::make_shared<const CsrMatrix>(CsrMatrix::selection(ds.num_series * c, last_rows)), seq);
  return numeric::evaluate(g, single_input("window", std::move(window)), params).value(out);
}

Tensor encode_static(const Tensor& statics, const ParameterStore& params, const ModelConfig& cfg) {
  ComputeGraph g;
  const NodeId out = add_static_encoder(g, g.input("statics"), cfg);
  return numeric::evaluate(g, single_input("statics", statics), params).value(out);
}

namespace {

Tensor run_gcn_layer(const Tensor& node_states, CsrMatrix adjacency, const Tensor& weight,
                     bool final_layer) {
  if (node_states.rows() != adjacency.rows) {
    throw numeric::ShapeError("gcn_layer", std::to_string(node_states.rows()) +
                                               " state rows for " +
                                               std::to_string(adjacency.rows) + " nodes");
  }
  ComputeGraph g;
  NodeId x = g.sparse_matmul(std::make_shared<const CsrMatrix>(std::move(adjacency)),
                             g.linear(g.input("h"), g.constant(weight)));
  if (!final_layer) x = g.relu(x);
  return numeric::evaluate(g, single_input("h", node_states), ParameterStore{}).value(x);
}

}  // namespace

Tensor gcn_layer(const Tensor& node_states, const graph::SparseGraph& g, const Tensor& weight,
                 bool final_layer) {
  return run_gcn_layer(node_states, normalized_adjacency(g), weight, final_layer);
}

Tensor gcn_layer(const Tensor& node_states, const graph::SubgraphBatch& batch,
                 const Tensor& weight, bool final_layer) {
  return run_gcn_layer(node_states, normalized_adjacency(batch), weight, final_layer);
}

std::vector<double> ensemble_weights(const ParameterStore& params) {
  ComputeGraph g;
  const NodeId w = g.softmax(g.param("gem.logits"));
  const Tensor out = numeric::evaluate(g, {}, params).value(w);
  return {out.values().begin(), out.values().end()};
}

Tensor gem_forward(const Tensor& node_states, const std::vector<graph::SubgraphBatch>& subgraphs,
                   const ParameterStore& params, const ModelConfig& cfg) {
  if (!cfg.uses_graphs()) throw std::invalid_argument("gem_forward: model has no graphs");
  if (subgraphs.size() != cfg.gem.num_graphs) {
    throw std::invalid_argument("gem_forward: expected " + std::to_string(cfg.gem.num_graphs) +
                                " subgraphs, got " + std::to_string(subgraphs.size()));
  }
  for (const auto& sb : subgraphs) {
    if (sb.seeds != subgraphs.front().seeds) {
      throw std::invalid_argument("gem_forward: seed sets differ across graphs");
    }
    if (sb.hops != cfg.gem.layers) {
      throw std::invalid_argument("gem_forward: subgraph built with L=" + std::to_string(sb.hops) +
                                  " but model has " + std::to_string(cfg.gem.layers) + " layers");
    }
  }
  ComputeGraph g;
  const NodeId h = g.input("h");
  std::vector<NodeId> stacks;
  const std::size_t m = subgraphs.front().seeds.size();
  std::vector<std::size_t> seed_rows(m);
  std::iota(seed_rows.begin(), seed_rows.end(), 0);
  for (std::size_t r = 0; r < subgraphs.size(); ++r) {
    const auto& sb = subgraphs[r];
    std::vector<std::size_t> picks(sb.extended.begin(), sb.extended.end());
    const NodeId local = g.sparse_matmul(
        std::make_shared<const CsrMatrix>(CsrMatrix::selection(node_states.rows(), picks)), h);
    const NodeId stack = add_gcn_stack(
        g, local, std::make_shared<const CsrMatrix>(normalized_adjacency(sb)), r, cfg);
    stacks.push_back(g.sparse_matmul(
        std::make_shared<const CsrMatrix>(CsrMatrix::selection(sb.extended.size(), seed_rows)),
        stack));
  }
  const NodeId out = add_graph_ensemble(g, stacks);
  return numeric::evaluate(g, single_input("h", node_states), params).value(out);
}

Tensor gem_forward_full(const Tensor& node_states, const std::vector<graph::SparseGraph>& graphs,
                        const ParameterStore& params, const ModelConfig& cfg) {
  if (graphs.size() != cfg.gem.num_graphs) {
    throw std::invalid_argument("gem_forward_full: graph count mismatch");
  }
  ComputeGraph g;
  const NodeId h = g.input("h");
  std::vector<NodeId> stacks;
  for (std::size_t r = 0; r < graphs.size(); ++r) {
    if (graphs[r].num_nodes() != node_states.rows()) {
      throw numeric::ShapeError("gem_forward_full", "graph size differs from state rows");
    }
    stacks.push_back(add_gcn_stack(
        g, h, std::make_shared<const CsrMatrix>(normalized_adjacency(graphs[r])), r, cfg));
  }
  const NodeId out = add_graph_ensemble(g, stacks);
  return numeric::evaluate(g, single_input("h", node_states), params).value(out);
}

std::vector<double> decode(const std::vector<double>& encoder_row,
                           const std::vector<double>& gem_row,
                           const std::vector<double>& static_row, const ParameterStore& params,
                           const ModelConfig& cfg) {
  if (encoder_row.size() != cfg.encoder.output_width || gem_row.size() != cfg.gem_width() ||
      static_row.size() != cfg.static_width) {
    throw numeric::ShapeError("decode", "input widths do not match the model configuration");
  }
  ComputeGraph g;
  const NodeId h = g.input("h");
  const NodeId s = g.input("s");
  NodeId gr = 0;
  if (cfg.uses_graphs()) gr = g.input("g");
  const NodeId out = add_decoder(g, h, cfg.uses_graphs() ? &gr : nullptr, s, cfg);
  std::map<std::string, Tensor> inputs;
  inputs.emplace("h", Tensor({1, encoder_row.size()}, encoder_row));
  inputs.emplace("s", Tensor({1, static_row.size()}, static_row));
  if (cfg.uses_graphs()) inputs.emplace("g", Tensor({1, gem_row.size()}, gem_row));
  const Tensor y = numeric::evaluate(g, inputs, params).value(out);
  return {y.values().begin(), y.values().end()};
}

}  // namespace geann::forecast
