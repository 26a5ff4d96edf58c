#include "geann/forecast/program.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace geann::forecast {

namespace {

std::shared_ptr<const CsrMatrix> share(CsrMatrix m) {
  return std::make_shared<const CsrMatrix>(std::move(m));
}

}  // namespace

BatchProgram build_batch_program(const TimeSeriesDataset& ds, const ModelConfig& cfg,
                                 const BatchRequest& request,
                                 const std::vector<graph::SubgraphBatch>& subgraphs,
                                 bool with_loss) {
  const auto& seeds = request.seeds;
  const auto& fcts = request.creation_times;
  if (seeds.empty() || fcts.empty()) throw std::invalid_argument("batch: no seeds or creation times");
  if (subgraphs.size() != cfg.gem.num_graphs) {
    throw std::invalid_argument("batch: expected " + std::to_string(cfg.gem.num_graphs) +
                                " subgraphs, got " + std::to_string(subgraphs.size()));
  }
  for (const auto& sb : subgraphs) {
    if (sb.seeds != seeds) throw std::invalid_argument("batch: subgraph seeds differ from batch");
    if (sb.hops != cfg.gem.layers) throw std::invalid_argument("batch: subgraph hop count != L");
  }
  for (std::size_t t : fcts) {
    if (t < ds.context_length || t > ds.length) {
      throw std::invalid_argument("batch: creation time " + std::to_string(t) + " out of range");
    }
  }
  const std::size_t m = seeds.size();
  const std::size_t f_count = fcts.size();
  // Positions before min(t) - C never reach an encoder state at a requested
  // creation time because the receptive field is at most C.
  const std::size_t seq_start = *std::min_element(fcts.begin(), fcts.end()) - ds.context_length;
  const std::size_t seq_len = *std::max_element(fcts.begin(), fcts.end()) - seq_start;

  // Union of extended sets, seeds first.
  std::vector<graph::NodeId> nodes(seeds.begin(), seeds.end());
  std::unordered_map<graph::NodeId, std::size_t> position;
  for (std::size_t i = 0; i < m; ++i) position.emplace(seeds[i], i);
  for (const auto& sb : subgraphs) {
    for (graph::NodeId v : sb.extended) {
      if (position.emplace(v, nodes.size()).second) nodes.push_back(v);
    }
  }
  const std::size_t u_count = nodes.size();
  const std::size_t ch = 1 + ds.num_covariates;

  BatchProgram prog;
  Tensor sequences = Tensor::matrix(u_count * seq_len, ch);
  for (std::size_t u = 0; u < u_count; ++u) {
    const std::size_t i = nodes[u];
    for (std::size_t p = 0; p < seq_len; ++p) {
      double* row = sequences.data() + (u * seq_len + p) * ch;
      row[0] = ds.y(i, seq_start + p);
      for (std::size_t c = 0; c < ds.num_covariates; ++c) row[1 + c] = ds.x(i, seq_start + p, c);
    }
  }
  Tensor statics = Tensor::matrix(m, ds.num_static);
  for (std::size_t s = 0; s < m; ++s) {
    for (std::size_t c = 0; c < ds.num_static; ++c) {
      statics(s, c) = ds.statics[seeds[s] * ds.num_static + c];
    }
  }
  prog.inputs.emplace("sequences", std::move(sequences));
  prog.inputs.emplace("statics", std::move(statics));

  auto& g = prog.graph;
  const NodeId enc_seq = add_temporal_encoder(g, g.input("sequences"), seq_len, cfg);
  // Encoder state at each creation time t is the output at position t - 1.
  std::vector<std::size_t> picks;
  picks.reserve(u_count * f_count);
  for (std::size_t u = 0; u < u_count; ++u) {
    for (std::size_t t : fcts) picks.push_back(u * seq_len + (t - 1 - seq_start));
  }
  const NodeId enc_at = g.sparse_matmul(share(CsrMatrix::selection(u_count * seq_len, picks)),
                                        enc_seq);

  std::vector<std::size_t> seed_rows(m * f_count);
  for (std::size_t r = 0; r < seed_rows.size(); ++r) seed_rows[r] = r;
  const NodeId enc_seed =
      g.sparse_matmul(share(CsrMatrix::selection(u_count * f_count, seed_rows)), enc_at);

  std::optional<NodeId> gem_out;
  if (cfg.uses_graphs()) {
    std::vector<NodeId> stacks;
    for (std::size_t r = 0; r < subgraphs.size(); ++r) {
      const auto& sb = subgraphs[r];
      const std::size_t e_count = sb.extended.size();
      std::vector<std::size_t> local_picks;
      local_picks.reserve(e_count * f_count);
      for (graph::NodeId v : sb.extended) {
        const std::size_t u = position.at(v);
        for (std::size_t f = 0; f < f_count; ++f) local_picks.push_back(u * f_count + f);
      }
      const NodeId local = g.sparse_matmul(
          share(CsrMatrix::selection(u_count * f_count, local_picks)), enc_at);
      const NodeId stack = add_gcn_stack(
          g, local, share(normalized_adjacency(sb).replicated(f_count)), r, cfg);
      stacks.push_back(
          g.sparse_matmul(share(CsrMatrix::selection(e_count * f_count, seed_rows)), stack));
    }
    gem_out = add_graph_ensemble(g, stacks);
  }

  std::vector<std::size_t> static_picks(m * f_count);
  for (std::size_t s = 0; s < m; ++s) {
    for (std::size_t f = 0; f < f_count; ++f) static_picks[s * f_count + f] = s;
  }
  const NodeId static_rows = g.sparse_matmul(share(CsrMatrix::selection(m, static_picks)),
                                             add_static_encoder(g, g.input("statics"), cfg));
  prog.forecasts = add_decoder(g, enc_seed, gem_out ? &*gem_out : nullptr, static_rows, cfg);

  if (with_loss) {
    const std::size_t nh = ds.horizons.size(), nq = ds.quantiles.size();
    auto targets = std::make_shared<numeric::PinballTargets>();
    targets->targets = Tensor::matrix(m * f_count, nh * nq);
    targets->mask = Tensor::matrix(m * f_count, nh * nq);
    for (std::size_t h = 0; h < nh; ++h) {
      for (double q : ds.quantiles) targets->column_quantiles.push_back(q);
    }
    for (std::size_t s = 0; s < m; ++s) {
      for (std::size_t f = 0; f < f_count; ++f) {
        for (std::size_t h = 0; h < nh; ++h) {
          const std::size_t target = fcts[f] + ds.horizons[h] - 1;
          if (target >= request.target_end || target >= ds.length ||
              !ds.is_observed(seeds[s], target)) {
            continue;
          }
          for (std::size_t q = 0; q < nq; ++q) {
            targets->targets(s * f_count + f, h * nq + q) = ds.y(seeds[s], target);
            targets->mask(s * f_count + f, h * nq + q) = 1.0;
            ++prog.loss_terms;
          }
        }
      }
    }
    prog.loss = g.sum(g.pinball(prog.forecasts, targets));
    g.mark_output("loss", *prog.loss);
  }
  g.mark_output("forecasts", prog.forecasts);
  return prog;
}

QuantileForecast predict(const TimeSeriesDataset& ds, const ModelConfig& cfg,
                         const ParameterStore& params,
                         const std::vector<graph::SparseGraph>& graphs,
                         const std::vector<std::size_t>& series,
                         const std::vector<std::size_t>& creation_times, std::size_t chunk) {
  if (chunk == 0) throw std::invalid_argument("predict: chunk must be >= 1");
  QuantileForecast out(series, creation_times, ds.horizons.size(), ds.quantiles.size());
  const std::size_t width = ds.horizons.size() * ds.quantiles.size();
  const std::size_t f_count = creation_times.size();
  for (std::size_t lo = 0; lo < series.size(); lo += chunk) {
    const std::size_t hi = std::min(series.size(), lo + chunk);
    BatchRequest req;
    req.seeds.assign(series.begin() + static_cast<std::ptrdiff_t>(lo),
                     series.begin() + static_cast<std::ptrdiff_t>(hi));
    req.creation_times = creation_times;
    std::vector<graph::SubgraphBatch> subgraphs;
    for (const auto& gr : graphs) subgraphs.push_back(graph::hop_subgraph(gr, req.seeds, cfg.gem.layers));
    const BatchProgram prog = build_batch_program(ds, cfg, req, subgraphs, false);
    const Tensor y = numeric::evaluate(prog.graph, prog.inputs, params).value(prog.forecasts);
    for (std::size_t s = 0; s < hi - lo; ++s) {
      for (std::size_t f = 0; f < f_count; ++f) {
        const double* row = y.data() + (s * f_count + f) * width;
        std::copy(row, row + width, out.values.begin() +
                                        static_cast<std::ptrdiff_t>(out.index(lo + s, f, 0, 0)));
      }
    }
  }
  return out;
}

}  // namespace geann::forecast
