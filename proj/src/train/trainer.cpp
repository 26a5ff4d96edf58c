#include "geann/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "geann/forecast/program.hpp"
#include "geann/util/parallel.hpp"
#include "geann/util/text.hpp"

namespace geann::train {

std::vector<std::vector<graph::NodeId>> partition_batches(std::size_t n, std::size_t m,
                                                          std::uint64_t seed) {
  if (m == 0) throw std::invalid_argument("partition_batches: batch size must be >= 1");
  std::vector<graph::NodeId> order(n);
  std::iota(order.begin(), order.end(), graph::NodeId{0});
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the permutation is library-independent.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng() % i;
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<graph::NodeId>> batches;
  for (std::size_t lo = 0; lo < n; lo += m) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(lo),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, lo + m)));
  }
  return batches;
}

std::vector<std::size_t> creation_time_grid(std::size_t first, std::size_t last,
                                            std::size_t count, std::uint64_t seed) {
  if (last < first) return {};
  const std::size_t span = last - first + 1;
  std::vector<std::size_t> out;
  if (count == 0 || count >= span) {
    for (std::size_t t = first; t <= last; ++t) out.push_back(t);
    return out;
  }
  const std::size_t step = std::max<std::size_t>(1, span / count);
  std::mt19937_64 rng(seed);
  const std::size_t phase = rng() % step;
  for (std::size_t t = first + phase; t <= last; t += step) out.push_back(t);
  return out;
}

TrainResult train(const forecast::TimeSeriesDataset& ds,
                  const std::vector<graph::SparseGraph>& graphs, const TrainConfig& cfg,
                  const forecast::ModelConfig& model_in) {
  ds.validate();
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
  forecast::ModelConfig model = model_in;
  model.gem.num_graphs = graphs.size();
  model.bind(ds);
  for (const auto& g : graphs) {
    if (g.num_nodes() != ds.num_series) {
      throw std::invalid_argument("train: graph has " + std::to_string(g.num_nodes()) +
                                  " nodes, dataset has " + std::to_string(ds.num_series));
    }
    if (g.max_in_degree() > cfg.top_k) {
      throw std::invalid_argument("train: graph not sparsified to top_k=" +
                                  std::to_string(cfg.top_k));
    }
  }
  const std::size_t train_end = cfg.train_end == 0 ? ds.length : cfg.train_end;
  if (train_end > ds.length) throw std::invalid_argument("train: train_end beyond series length");
  if (!(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0)) {
    throw std::invalid_argument("train: validation fraction must lie in [0,1)");
  }
  const auto held_out =
      static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(train_end)));
  const std::size_t fit_end = train_end - held_out;
  if (fit_end <= ds.context_length) {
    throw std::invalid_argument("train: fitting window shorter than the context length");
  }
  const std::size_t first_fct = ds.context_length;
  const std::size_t last_fct = fit_end - 1;

  TrainResult result;
  result.params = forecast::init_parameters(model, cfg.seed);
  Optimizer optimizer(cfg.optimizer);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto batches = partition_batches(
        ds.num_series, cfg.batch_size, numeric::derive_seed(cfg.seed, "epoch" + std::to_string(epoch)));
    double epoch_sum = 0.0;
    std::size_t epoch_terms = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      forecast::BatchRequest req;
      req.seeds = batches[b];
      req.target_end = fit_end;
      req.creation_times = creation_time_grid(
          first_fct, last_fct, cfg.creation_times_per_batch,
          numeric::derive_seed(cfg.seed, "fct" + std::to_string(epoch) + "/" + std::to_string(b)));

      std::vector<graph::SubgraphBatch> subgraphs(graphs.size());
      util::parallel_for(graphs.size(), [&](std::size_t r) {
        subgraphs[r] = graph::hop_subgraph(graphs[r], req.seeds, model.gem.layers);
      });

      const auto prog = forecast::build_batch_program(ds, model, req, subgraphs, true);
      const auto act = numeric::evaluate(prog.graph, prog.inputs, result.params);
      const double loss = act.value(*prog.loss).item();
      const std::string where = "epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1);
      if (!std::isfinite(loss)) throw std::runtime_error("train: non-finite loss at " + where);
      numeric::backward(prog.graph, act, *prog.loss, result.params);
      try {
        optimizer.step(result.params);
      } catch (const std::domain_error& e) {
        throw std::runtime_error("train: " + std::string(e.what()) + " at " + where);
      }
      if (!result.params.all_finite()) {
        throw std::runtime_error("train: non-finite parameters after " + where);
      }
      result.log.push_back({epoch, b + 1, loss});
      epoch_sum += loss;
      epoch_terms += prog.loss_terms;
    }
    result.epoch_loss.push_back(epoch_terms ? epoch_sum / static_cast<double>(epoch_terms) : 0.0);
  }

  result.validation_wql = std::numeric_limits<double>::quiet_NaN();
  const std::size_t max_h = ds.max_horizon();
  if (held_out > 0 && train_end >= max_h && train_end - max_h + 1 > fit_end) {
    try {
      const auto report = evaluate_weighted_ql(ds, model, result.params, graphs, fit_end,
                                               train_end - max_h + 1);
      result.validation_wql = report.segments.front().overall;
    } catch (const std::domain_error&) {
      // zero demand in the validation window: metric undefined
    }
  }
  return result;
}

void write_train_log(std::ostream& out, const std::vector<LogEntry>& log) {
  out << "epoch,batch,loss\n";
  for (const auto& e : log) out << e.epoch << ',' << e.batch << ',' << util::format_double(e.loss) << '\n';
}

const SegmentReport& EvalReport::segment(const std::string& name) const {
  for (const auto& s : segments) {
    if (s.name == name) return s;
  }
  throw std::out_of_range("no segment named " + name);
}

SegmentReport weighted_quantile_loss(const forecast::TimeSeriesDataset& ds,
                                     const forecast::QuantileForecast& fc,
                                     const Segment& segment) {
  const std::size_t nq = ds.quantiles.size();
  std::vector<double> loss(nq, 0.0);
  double demand = 0.0;
  for (std::size_t s = 0; s < fc.series.size(); ++s) {
    const std::size_t i = fc.series[s];
    for (std::size_t f = 0; f < fc.creation_times.size(); ++f) {
      const std::size_t t = fc.creation_times[f];
      if (segment.filter && !segment.filter(i, t)) continue;
      for (std::size_t h = 0; h < fc.num_horizons; ++h) {
        const std::size_t target = t + ds.horizons[h] - 1;
        if (target >= ds.length || !ds.is_observed(i, target)) continue;
        const double d = ds.y(i, target);
        demand += d;
        for (std::size_t q = 0; q < nq; ++q) {
          loss[q] += forecast::quantile_loss(d, fc.at(s, f, h, q), ds.quantiles[q]);
        }
      }
    }
  }
  if (!(demand > 0.0)) {
    throw std::domain_error("weighted QL undefined for segment '" + segment.name +
                            "': total demand is zero");
  }
  SegmentReport rep;
  rep.name = segment.name;
  for (double l : loss) rep.per_quantile.push_back(l / demand);
  rep.overall = std::accumulate(rep.per_quantile.begin(), rep.per_quantile.end(), 0.0) /
                static_cast<double>(nq);
  return rep;
}

EvalReport evaluate_weighted_ql(const forecast::TimeSeriesDataset& ds,
                                const forecast::ModelConfig& model,
                                const forecast::ParameterStore& params,
                                const std::vector<graph::SparseGraph>& graphs,
                                std::size_t split_begin, std::size_t split_end,
                                const std::vector<Segment>& extra_segments) {
  std::vector<std::size_t> fcts;
  for (std::size_t t = std::max(split_begin, ds.context_length); t < split_end && t <= ds.length; ++t) {
    fcts.push_back(t);
  }
  if (fcts.empty()) throw std::invalid_argument("evaluate: empty creation-time split");
  std::vector<std::size_t> series(ds.num_series);
  std::iota(series.begin(), series.end(), std::size_t{0});
  const auto fc = forecast::predict(ds, model, params, graphs, series, fcts);

  EvalReport report;
  report.quantiles = ds.quantiles;
  report.segments.push_back(weighted_quantile_loss(ds, fc, Segment{"all", {}}));
  for (const auto& seg : extra_segments) report.segments.push_back(weighted_quantile_loss(ds, fc, seg));
  return report;
}

void write_eval_report(std::ostream& out, const EvalReport& report) {
  out << "segment,quantile,weighted_ql\n";
  for (const auto& seg : report.segments) {
    for (std::size_t q = 0; q < report.quantiles.size(); ++q) {
      out << seg.name << ',' << util::format_double(report.quantiles[q]) << ','
          << util::format_double(seg.per_quantile[q]) << '\n';
    }
    out << seg.name << ",overall," << util::format_double(seg.overall) << '\n';
  }
}

}  // namespace geann::train
