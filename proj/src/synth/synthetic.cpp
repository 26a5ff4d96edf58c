#include "geann/synth/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "geann/util/text.hpp"

namespace geann::synth {

namespace {

constexpr std::size_t kMinOosWindow = 4;
constexpr std::size_t kMaxOosWindow = 8;

std::mt19937_64 stream(std::uint64_t seed, const std::string& label) {
  return std::mt19937_64(numeric::derive_seed(seed, label));
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t uniform_int(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

const char* kind_name(SeriesKind k) {
  switch (k) {
    case SeriesKind::kColdStart: return "cold_start";
    case SeriesKind::kOutOfStock: return "oos";
    default: return "normal";
  }
}

}  // namespace

void SyntheticSpec::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("synthetic spec: " + m); };
  if (num_series == 0 || length == 0) fail("num_series and length must be >= 1");
  if (num_clusters == 0 || num_clusters > num_series) fail("need 1 <= num_clusters <= num_series");
  if (!(cold_start_fraction >= 0.0 && cold_start_fraction < 1.0)) fail("cold_start_fraction outside [0,1)");
  if (!(oos_fraction >= 0.0 && oos_fraction < 1.0)) fail("oos_fraction outside [0,1)");
  if (cold_start_fraction + oos_fraction > 1.0) fail("cold-start and OOS fractions exceed 1");
  if (!(noise_scale >= 0.0 && std::isfinite(noise_scale))) fail("noise_scale must be finite and >= 0");
  if (!(scale_spread >= 0.0 && scale_spread < 1.0)) fail("scale_spread outside [0,1)");
  if (context_length == 0 || context_length >= length) fail("need 1 <= context_length < length");
  if (horizons.empty()) fail("no horizons");
  for (std::size_t h : horizons) {
    if (h == 0) fail("horizons must be >= 1");
  }
  if (quantiles.empty()) fail("no quantiles");
  for (double q : quantiles) {
    if (!(q > 0.0 && q < 1.0)) fail("quantiles must lie in (0,1)");
  }
  const std::size_t te = effective_train_end();
  if (te > length || te < 4) fail("train_end must lie in [4, length]");
  if (oos_fraction > 0.0 && length < context_length + kMaxOosWindow) {
    fail("series too short for stock-out windows");
  }
  if (truth_k == 0) fail("truth_k must be >= 1");
}

SyntheticSpec SyntheticSpec::from_config(const util::KeyValueConfig& kv) {
  kv.require_known({"num_series", "length", "num_clusters", "cold_start_fraction", "oos_fraction",
                    "noise_scale", "scale_spread", "seed", "context_length", "horizons",
                    "quantiles", "train_end", "truth_k"});
  SyntheticSpec s;
  s.num_series = kv.get_size("num_series", s.num_series);
  s.length = kv.get_size("length", s.length);
  s.num_clusters = kv.get_size("num_clusters", s.num_clusters);
  s.cold_start_fraction = kv.get_double("cold_start_fraction", s.cold_start_fraction);
  s.oos_fraction = kv.get_double("oos_fraction", s.oos_fraction);
  s.noise_scale = kv.get_double("noise_scale", s.noise_scale);
  s.scale_spread = kv.get_double("scale_spread", s.scale_spread);
  s.seed = kv.get_u64("seed", s.seed);
  s.context_length = kv.get_size("context_length", s.context_length);
  s.horizons = kv.get_size_list("horizons", s.horizons);
  s.quantiles = kv.get_double_list("quantiles", s.quantiles);
  s.train_end = kv.get_size("train_end", s.train_end);
  s.truth_k = kv.get_size("truth_k", s.truth_k);
  return s;
}

std::string SyntheticSpec::to_text() const {
  std::string q;
  for (std::size_t i = 0; i < quantiles.size(); ++i) q += (i ? "," : "") + util::format_double(quantiles[i]);
  return "num_series=" + std::to_string(num_series) + "\nlength=" + std::to_string(length) +
         "\nnum_clusters=" + std::to_string(num_clusters) +
         "\ncold_start_fraction=" + util::format_double(cold_start_fraction) +
         "\noos_fraction=" + util::format_double(oos_fraction) +
         "\nnoise_scale=" + util::format_double(noise_scale) +
         "\nscale_spread=" + util::format_double(scale_spread) + "\nseed=" + std::to_string(seed) +
         "\ncontext_length=" + std::to_string(context_length) + "\nhorizons=" + join(horizons) +
         "\nquantiles=" + q + "\ntrain_end=" + std::to_string(train_end) +
         "\ntruth_k=" + std::to_string(truth_k) + "\n";
}

SyntheticBundle generate(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.num_series, len = spec.length, nc = spec.num_clusters;
  SyntheticBundle b;
  b.dataset = forecast::make_dataset(n, len, 2, 2, spec.context_length, spec.horizons, spec.quantiles);
  auto& ds = b.dataset;

  // Cluster latent signal: level * (1 + seasonality + trend + AR(1) shocks).
  std::vector<double> level(nc);
  std::vector<std::vector<double>> signal(nc, std::vector<double>(len));
  for (std::size_t c = 0; c < nc; ++c) {
    auto rng = stream(spec.seed, "cluster/" + std::to_string(c));
    level[c] = uniform(rng, 2.0, 10.0);
    const double period = static_cast<double>(uniform_int(rng, 4, 13));
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double amp = uniform(rng, 0.2, 0.6);
    const double slope = uniform(rng, -0.5, 0.5);
    std::normal_distribution<double> shock(0.0, 0.15);
    double z = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      z = 0.85 * z + shock(rng);
      const double tt = static_cast<double>(t);
      const double rel = 1.0 + amp * std::sin(2.0 * std::numbers::pi * tt / period + phase) +
                         slope * (tt / static_cast<double>(len) - 0.5) + z;
      signal[c][t] = level[c] * std::max(0.0, rel);
    }
  }

  b.cluster.resize(n);
  std::vector<std::vector<graph::NodeId>> members(nc);
  for (std::size_t i = 0; i < n; ++i) {
    b.cluster[i] = static_cast<std::uint32_t>(i % nc);
    members[i % nc].push_back(static_cast<graph::NodeId>(i));
  }

  // Series kinds: cold-start drawn first, stock-outs from the remainder.
  b.labels.assign(n, SeriesLabel{});
  {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    auto rng = stream(spec.seed, "kinds");
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_cold = static_cast<std::size_t>(std::llround(spec.cold_start_fraction * static_cast<double>(n)));
    const auto n_oos = static_cast<std::size_t>(std::llround(spec.oos_fraction * static_cast<double>(n)));
    for (std::size_t r = 0; r < n_cold; ++r) b.labels[order[r]].kind = SeriesKind::kColdStart;
    for (std::size_t r = n_cold; r < std::min(n, n_cold + n_oos); ++r) {
      b.labels[order[r]].kind = SeriesKind::kOutOfStock;
    }
  }

  const std::size_t te = spec.effective_train_end();
  const std::size_t launch_lo = te - te * 3 / 10;
  std::vector<graph::Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = stream(spec.seed, "series/" + std::to_string(i));
    const std::size_t c = b.cluster[i];
    const double spread = spec.scale_spread;
    const double scale = 1.0 + spread * uniform(rng, -1.0, 1.0);
    const double sigma = spec.noise_scale * level[c];
    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t t = 0; t < len; ++t) {
      ds.targets[i * len + t] = std::max(0.0, scale * signal[c][t] + sigma * unit(rng));
    }
    ds.statics[i * 2 + 0] = (spread > 0.0 ? (scale - 1.0) / spread : 0.0) + 0.5 * unit(rng);
    ds.statics[i * 2 + 1] = uniform(rng, -1.0, 1.0);

    auto& lab = b.labels[i];
    std::size_t launch = 0;
    if (lab.kind == SeriesKind::kColdStart) {
      launch = uniform_int(rng, launch_lo, te - 1);
      lab.start = lab.end = launch;
    } else if (lab.kind == SeriesKind::kOutOfStock) {
      const std::size_t w = uniform_int(rng, kMinOosWindow, kMaxOosWindow);
      lab.start = uniform_int(rng, spec.context_length, len - w);
      lab.end = lab.start + w;
    }
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t k = i * len + t;
      const bool pre_launch = t < launch;
      const bool stocked_out = lab.kind == SeriesKind::kOutOfStock && t >= lab.start && t < lab.end;
      ds.covariates[k * 2 + 0] = pre_launch ? 0.0 : 1.0;
      ds.covariates[k * 2 + 1] = stocked_out ? 1.0 : 0.0;
      if (pre_launch || stocked_out) {
        ds.targets[k] = 0.0;
        ds.observed[k] = 0;
      }
    }

    // Truth in-edges: truth_k distinct same-cluster sources.
    std::vector<graph::NodeId> pool;
    for (graph::NodeId v : members[c]) {
      if (v != i) pool.push_back(v);
    }
    const std::size_t k = std::min(spec.truth_k, pool.size());
    for (std::size_t r = 0; r < k; ++r) {
      std::swap(pool[r], pool[uniform_int(rng, r, pool.size() - 1)]);
      edges.push_back({pool[r], static_cast<graph::NodeId>(i), 1.0});
    }
  }
  b.truth_graph = graph::SparseGraph(n, std::move(edges));
  b.memberships.attributes.resize(n);
  for (std::size_t i = 0; i < n; ++i) b.memberships.attributes[i] = {b.cluster[i]};
  ds.validate();
  return b;
}

void write_labels(std::ostream& out, const std::vector<SeriesLabel>& labels) {
  out << "series,kind,start,end\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << i << ',' << kind_name(labels[i].kind) << ',' << labels[i].start << ',' << labels[i].end
        << '\n';
  }
}

std::vector<SeriesLabel> load_labels(std::istream& in, std::size_t n) {
  std::vector<SeriesLabel> labels(n);
  std::vector<bool> seen(n, false);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& m) {
    throw graph::ParseError(line_no, m);
  };
  while (std::getline(in, line)) {
    ++line_no;
    util::strip_cr(line);
    const std::string_view row = util::trim(line);
    if (row.empty() || (line_no == 1 && row.starts_with("series"))) continue;
    const auto f = util::split(row, ',');
    if (f.size() != 4) fail("expected series,kind,start,end");
    std::size_t i = 0;
    SeriesLabel lab;
    if (!util::parse_size(util::trim(f[0]), i) || !util::parse_size(util::trim(f[2]), lab.start) ||
        !util::parse_size(util::trim(f[3]), lab.end)) {
      fail("malformed integer field");
    }
    if (i >= n) fail("series id " + std::to_string(i) + " out of range");
    if (seen[i]) fail("duplicate series id " + std::to_string(i));
    const std::string kind(util::trim(f[1]));
    if (kind == "normal") {
      lab.kind = SeriesKind::kNormal;
    } else if (kind == "cold_start") {
      lab.kind = SeriesKind::kColdStart;
    } else if (kind == "oos") {
      lab.kind = SeriesKind::kOutOfStock;
      if (lab.end <= lab.start) fail("empty stock-out window");
    } else {
      fail("unknown kind '" + kind + "'");
    }
    labels[i] = lab;
    seen[i] = true;
  }
  return labels;
}

train::Segment cold_start_segment(const std::vector<SeriesLabel>& labels, std::size_t context) {
  return {"cold_start", [labels, context](std::size_t i, std::size_t t) {
            const auto& l = labels.at(i);
            return l.kind == SeriesKind::kColdStart && t < l.start + context;
          }};
}

train::Segment oos_segment(const std::vector<SeriesLabel>& labels, std::size_t context) {
  return {"oos", [labels, context](std::size_t i, std::size_t t) {
            const auto& l = labels.at(i);
            return l.kind == SeriesKind::kOutOfStock && t > l.start && t < l.end + context;
          }};
}

std::vector<train::Segment> standard_segments(const std::vector<SeriesLabel>& labels,
                                              std::size_t context) {
  return {cold_start_segment(labels, context), oos_segment(labels, context)};
}

construct::EmbeddingMatrix encoder_trajectory(const forecast::TimeSeriesDataset& ds,
                                              const forecast::ModelConfig& cfg,
                                              const forecast::ParameterStore& params,
                                              std::size_t first, std::size_t last) {
  const std::size_t c = ds.context_length;
  if (first < c || last < first || last > ds.length) {
    throw std::invalid_argument("encoder_trajectory: creation times outside [C, T]");
  }
  const std::size_t steps = last - first + 1;
  const std::size_t seq_start = first - c;
  const std::size_t seq_len = last - seq_start;
  const std::size_t width = cfg.encoder.output_width;
  const std::size_t ch = 1 + ds.num_covariates;
  construct::EmbeddingMatrix out = numeric::Tensor::matrix(ds.num_series, width * steps);
  constexpr std::size_t kChunk = 256;
  for (std::size_t lo = 0; lo < ds.num_series; lo += kChunk) {
    const std::size_t hi = std::min(ds.num_series, lo + kChunk);
    numeric::Tensor seq = numeric::Tensor::matrix((hi - lo) * seq_len, ch);
    std::vector<std::size_t> picks;
    for (std::size_t i = lo; i < hi; ++i) {
      for (std::size_t p = 0; p < seq_len; ++p) {
        double* row = seq.data() + ((i - lo) * seq_len + p) * ch;
        row[0] = ds.y(i, seq_start + p);
        for (std::size_t k = 0; k < ds.num_covariates; ++k) row[1 + k] = ds.x(i, seq_start + p, k);
      }
      for (std::size_t t = first; t <= last; ++t) picks.push_back((i - lo) * seq_len + t - 1 - seq_start);
    }
    numeric::ComputeGraph g;
    const auto enc = forecast::add_temporal_encoder(g, g.input("sequences"), seq_len, cfg);
    const auto sel = g.sparse_matmul(std::make_shared<const numeric::CsrMatrix>(
                                         numeric::CsrMatrix::selection(seq.rows(), picks)),
                                     enc);
    std::map<std::string, numeric::Tensor> inputs;
    inputs.emplace("sequences", std::move(seq));
    const numeric::Tensor h = numeric::evaluate(g, inputs, params).value(sel);
    // Selected rows are (series, step)-major, so each series block is contiguous.
    std::copy(h.data(), h.data() + h.size(), out.data() + lo * width * steps);
  }
  return out;
}

Pretrained pretrain_embeddings(const forecast::TimeSeriesDataset& ds,
                               const forecast::ModelConfig& cfg, const train::TrainConfig& tc) {
  forecast::ModelConfig model = cfg;
  model.gem.num_graphs = 0;
  auto result = train::train(ds, {}, tc, model);
  model.bind(ds);
  const std::size_t end = tc.train_end == 0 ? ds.length : tc.train_end;
  Pretrained p;
  p.embeddings = encoder_trajectory(ds, model, result.params, ds.context_length, end);
  p.params = std::move(result.params);
  return p;
}

}  // namespace geann::synth
