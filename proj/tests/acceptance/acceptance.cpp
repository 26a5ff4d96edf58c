// Acceptance runner: one PASS/FAIL line per criterion.
//
//   geann_acceptance                 run every criterion
//   geann_acceptance --criterion 7   run one

#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "geann/construct/graph_construction.hpp"
#include "geann/forecast/loss.hpp"
#include "geann/forecast/model.hpp"
#include "geann/forecast/program.hpp"
#include "geann/graph/sparse_graph.hpp"
#include "geann/numeric/finite_diff.hpp"
#include "geann/synth/synthetic.hpp"
#include "geann/train/trainer.hpp"
#include "geann/util/memory.hpp"
#include "support/toy.hpp"

namespace fs = std::filesystem;
namespace gt = geann::testing;
using namespace geann;
using numeric::Tensor;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<graph::NodeId> iota_ids(std::size_t n) {
  std::vector<graph::NodeId> v(n);
  std::iota(v.begin(), v.end(), graph::NodeId{0});
  return v;
}

/// Each node draws up to `max_in` distinct sources with weights in [0.1, 2).
graph::SparseGraph random_weighted_graph(std::size_t n, std::size_t max_in, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> deg(0, max_in), pick(0, n - 1);
  std::uniform_real_distribution<double> w(0.1, 2.0);
  std::vector<graph::Edge> edges;
  for (std::size_t v = 0; v < n; ++v) {
    std::set<std::size_t> src;
    const std::size_t want = std::min(deg(rng), n - 1);
    while (src.size() < want) {
      const std::size_t u = pick(rng);
      if (u != v) src.insert(u);
    }
    for (std::size_t u : src) {
      edges.push_back({static_cast<graph::NodeId>(u), static_cast<graph::NodeId>(v), w(rng)});
    }
  }
  return graph::SparseGraph(n, std::move(edges));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  }
  return m;
}

// --- 1 ----------------------------------------------------------------------

/// Sign pattern of every rectifier input and every masked pinball residual.
std::vector<bool> kink_pattern(const numeric::ComputeGraph& g,
                               const std::map<std::string, Tensor>& inputs,
                               const numeric::ParameterStore& params) {
  const auto act = numeric::evaluate(g, inputs, params);
  std::vector<bool> bits;
  for (numeric::NodeId id = 0; id < g.size(); ++id) {
    const auto& node = g.node(id);
    if (node.kind == numeric::OpKind::kRelu) {
      for (double v : act.value(node.inputs[0]).values()) bits.push_back(v > 0.0);
    } else if (node.kind == numeric::OpKind::kPinball) {
      const auto pred = act.value(node.inputs[0]).values();
      const auto target = node.pinball->targets.values(), mask = node.pinball->mask.values();
      for (std::size_t k = 0; k < pred.size(); ++k) {
        if (mask[k] != 0.0) bits.push_back(target[k] > pred[k]);
      }
    }
  }
  return bits;
}

/// True when the central-difference stencil for one scalar crosses a kink.
bool straddles_kink(const numeric::ComputeGraph& g, const std::map<std::string, Tensor>& inputs,
                    const numeric::ParameterStore& params, const std::string& name,
                    std::size_t index, double eps) {
  numeric::ParameterStore p = params;
  const double v = p.value(name).values()[index];
  p.value(name).values()[index] = v + eps;
  const auto hi = kink_pattern(g, inputs, p);
  p.value(name).values()[index] = v - eps;
  return hi != kink_pattern(g, inputs, p);
}

Outcome gradient_check() {
  Clock clock;
  const auto ds = gt::toy_dataset(20, 40, 8, 2, 2, {1, 2}, 11);
  const auto cfg = gt::toy_model(ds, 2, 8, 8);
  auto params = forecast::init_parameters(cfg, 5);
  params.value("gem.logits")[0] = 0.3;
  params.value("gem.logits")[1] = -0.2;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> small(-0.1, 0.1);
  for (auto& [name, p] : params) {
    if (name.size() > 2 && name.substr(name.size() - 2) == ".b") {
      for (double& v : params.value(name).values()) v = small(rng);
    }
  }
  const std::vector<graph::SparseGraph> graphs{random_weighted_graph(20, 5, rng),
                                               random_weighted_graph(20, 5, rng)};
  std::vector<std::size_t> fcts(32);
  std::iota(fcts.begin(), fcts.end(), std::size_t{8});

  const forecast::BatchRequest req{iota_ids(20), fcts, ds.length};
  std::vector<graph::SubgraphBatch> sub;
  for (const auto& g : graphs) sub.push_back(graph::hop_subgraph(g, req.seeds, cfg.gem.layers));
  const auto prog = forecast::build_batch_program(ds, cfg, req, sub, true);
  const auto act = numeric::evaluate(prog.graph, prog.inputs, params);
  const double loss = act.value(*prog.loss).item();
  numeric::backward(prog.graph, act, *prog.loss, params);
  const auto fd = numeric::finite_diff_oracle(
      [&](const numeric::ParameterStore& p) {
        return numeric::evaluate(prog.graph, prog.inputs, p).value(*prog.loss).item();
      },
      params, 1e-4);

  // Entries where both gradients are below kFloor in magnitude are skipped.
  const double kFloor = 1e-8;
  double worst = 0.0, worst_smooth = 0.0;
  std::string worst_name;
  std::size_t total = 0, skipped = 0, failing = 0, failing_on_kink = 0;
  for (const auto& [name, num] : fd) {
    const auto an = params.grad(name).values();
    for (std::size_t i = 0; i < an.size(); ++i) {
      const double a = an[i], b = num.values()[i];
      const double scale = std::max(std::abs(a), std::abs(b));
      ++total;
      if (scale < kFloor) {
        ++skipped;
        continue;
      }
      const double err = std::abs(a - b) / scale;
      if (err > worst) {
        worst = err;
        worst_name = name + "[" + std::to_string(i) + "]";
      }
      const bool kink = straddles_kink(prog.graph, prog.inputs, params, name, i, 1e-4);
      if (!kink) worst_smooth = std::max(worst_smooth, err);
      if (err > 1e-4) {
        ++failing;
        failing_on_kink += kink;
      }
    }
  }
  const double secs = clock.seconds();
  return {worst <= 1e-4 && secs < 60.0,
          fmt("loss %.4f over %zu terms; %zu gradient entries (%zu skipped below %.0e); max rel err %.3e "
              "at %s; %zu entries above 1e-4, %zu of them with a rectifier or pinball kink "
              "inside +-eps; max rel err over kink-free entries %.3e; %.1f s",
              loss, prog.loss_terms, total, skipped, kFloor, worst, worst_name.c_str(), failing,
              failing_on_kink, worst_smooth, secs)};
}

// --- 2 ----------------------------------------------------------------------

Outcome seed_equivalence() {
  const auto ds = gt::toy_dataset(200, 20, 8, 1, 1, {1}, 1);
  double worst = 0.0;
  std::size_t rows = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    std::mt19937_64 rng(1000 + trial);
    const std::size_t r = 1 + trial % 2;
    const auto cfg = gt::toy_model(ds, r);
    auto params = forecast::init_parameters(cfg, trial);
    std::normal_distribution<double> logit(0.0, 1.0);
    for (double& v : params.value("gem.logits").values()) v = logit(rng);
    std::vector<graph::SparseGraph> graphs;
    for (std::size_t g = 0; g < r; ++g) {
      graphs.push_back(graph::top_k_sparsify(random_weighted_graph(200, 12, rng), 5));
    }
    const Tensor h = gt::random_matrix(200, cfg.encoder.output_width, rng);
    std::vector<graph::NodeId> all = iota_ids(200);
    std::shuffle(all.begin(), all.end(), rng);
    const std::size_t m = std::uniform_int_distribution<std::size_t>(1, 64)(rng);
    const std::vector<graph::NodeId> seeds(all.begin(), all.begin() + static_cast<long>(m));

    const Tensor full = forecast::gem_forward_full(h, graphs, params, cfg);
    std::vector<graph::SubgraphBatch> sub;
    for (const auto& g : graphs) sub.push_back(graph::hop_subgraph(g, seeds, 2));
    const Tensor part = forecast::gem_forward(h, sub, params, cfg);
    for (std::size_t s = 0; s < m; ++s) {
      for (std::size_t c = 0; c < full.cols(); ++c) {
        worst = std::max(worst, std::abs(part(s, c) - full(seeds[s], c)));
      }
      ++rows;
    }
  }
  return {worst <= 1e-10, fmt("100 triples, %zu seed rows, max abs diff %.3e", rows, worst)};
}

// --- 3 ----------------------------------------------------------------------

Outcome subgraph_bound() {
  std::mt19937_64 rng(3);
  std::size_t batches = 0, violations = 0, over_stated = 0;
  double max_ratio_geometric = 0.0, max_ratio_stated = 0.0;
  std::size_t max_ext = 0;
  const std::size_t sizes[] = {200, 1000, 5000};
  const std::size_t ks[] = {2, 5, 10};
  for (std::size_t gi = 0; gi < 20; ++gi) {
    const std::size_t n = sizes[gi % 3], k = ks[(gi / 3) % 3];
    const auto g = graph::top_k_sparsify(random_weighted_graph(n, 2 * k, rng), k);
    for (std::size_t b = 0; b < 50; ++b, ++batches) {
      const std::size_t hops = 1 + b % 3;
      const std::size_t m = std::uniform_int_distribution<std::size_t>(1, 128)(rng);
      std::vector<graph::NodeId> all = iota_ids(n);
      std::shuffle(all.begin(), all.end(), rng);
      const std::vector<graph::NodeId> seeds(all.begin(), all.begin() + static_cast<long>(m));
      const auto batch = graph::hop_subgraph(g, seeds, hops);
      double geometric = 0.0, kl = 1.0;
      for (std::size_t l = 0; l <= hops; ++l, kl *= static_cast<double>(k)) geometric += kl;
      geometric *= static_cast<double>(m);
      const double stated = static_cast<double>(m) * (1.0 + std::pow(static_cast<double>(k), hops));
      const double ext = static_cast<double>(batch.extended.size());
      if (ext > geometric) ++violations;
      if (ext > stated) ++over_stated;
      max_ratio_geometric = std::max(max_ratio_geometric, ext / geometric);
      max_ratio_stated = std::max(max_ratio_stated, ext / stated);
      max_ext = std::max(max_ext, batch.extended.size());
    }
  }
  return {violations == 0,
          fmt("%zu batches, %zu exceed m*sum k^l (max ratio %.3f); informational: %zu exceed "
              "m(1+k^L) (max ratio %.3f); largest neighbourhood %zu",
              batches, violations, max_ratio_geometric, over_stated, max_ratio_stated, max_ext)};
}

// --- 4 ----------------------------------------------------------------------

Outcome stability_suite() {
  synth::SyntheticSpec spec;
  spec.num_series = 200;
  spec.num_clusters = 10;
  spec.seed = 4;
  const auto b = synth::generate(spec);
  forecast::ModelConfig cfg;
  cfg.encoder.dilations = {1, 2, 4};
  cfg.encoder.channels = {8, 8, 8};
  cfg.encoder.output_width = 4;
  cfg.gem.num_graphs = 0;
  cfg.decoder_hidden = 16;
  cfg.bind(b.dataset);
  train::TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 64;
  tc.train_end = spec.train_end;
  tc.seed = 9;

  construct::NeighborRuns runs;
  for (int r = 0; r < 3; ++r) {
    const auto pre = synth::pretrain_embeddings(b.dataset, cfg, tc);
    runs.push_back(construct::neighbor_lists(construct::pearson_knn_graph(pre.embeddings, 10)));
  }
  double min_det = 1.0, max_det = 0.0;
  for (graph::NodeId v = 0; v < spec.num_series; ++v) {
    const double s = construct::knn_stability(runs, v, 10);
    min_det = std::min(min_det, s);
    max_det = std::max(max_det, s);
  }
  const bool det_ok = min_det == 1.0 && max_det == 1.0;

  const auto mc = construct::random_stability_baseline(1000, 10, 2, 10000, 77);
  const double expected = construct::expected_random_stability(1000, 10, 2);
  const double se = mc.standard_error();
  const double z = std::abs(mc.mean - expected) / se;
  return {det_ok && z <= 3.0 && expected == 0.01,
          fmt("deterministic runs: stability min %.17g max %.17g over %zu nodes; MC mean %.6f, "
              "expected %.6f, SE %.6f, |z| %.2f",
              min_det, max_det, spec.num_series, mc.mean, expected, se, z)};
}

// --- 5 ----------------------------------------------------------------------

Outcome gcn_reductions() {
  std::mt19937_64 rng(5);
  double worst_identity = 0.0, worst_dense = 0.0;
  std::uniform_int_distribution<std::size_t> width(1, 12), nodes(1, 40), small(2, 30);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = nodes(rng), in = width(rng), out = width(rng);
    const bool final_layer = trial % 2 == 0;
    const Tensor h = gt::random_matrix(n, in, rng, -3.0, 3.0);
    const Tensor w = gt::random_matrix(in, out, rng);
    const Tensor y = forecast::gcn_layer(h, graph::identity_graph(n), w, final_layer);
    Tensor ref = Tensor::matrix(n, out);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t o = 0; o < out; ++o) {
        double s = 0.0;
        for (std::size_t c = 0; c < in; ++c) s += h(i, c) * w(c, o);
        ref(i, o) = final_layer ? s : std::max(0.0, s);
      }
    }
    worst_identity = std::max(worst_identity, max_abs_diff(y, ref));
  }
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = small(rng), in = width(rng), out = width(rng);
    const auto g = random_weighted_graph(n, std::min<std::size_t>(n - 1, 8), rng);
    const Tensor h = gt::random_matrix(n, in, rng, -3.0, 3.0);
    const Tensor w = gt::random_matrix(in, out, rng);
    const bool final_layer = trial % 2 == 1;
    worst_dense = std::max(worst_dense, max_abs_diff(forecast::gcn_layer(h, g, w, final_layer),
                                                     gt::dense_gcn_layer(h, g, w, final_layer)));
  }
  return {worst_identity <= 1e-12 && worst_dense <= 1e-10,
          fmt("identity graph vs per-node map: max abs diff %.3e over 50 inputs; dense oracle: "
              "max abs diff %.3e over 50 graphs with N <= 30",
              worst_identity, worst_dense)};
}

// --- 6 ----------------------------------------------------------------------

Outcome quantile_metric() {
  const double e1 = std::abs(forecast::quantile_loss(10.0, 8.0, 0.5) - 1.0);
  const double e2 = std::abs(forecast::quantile_loss(0.0, 5.0, 0.9) - 0.5);
  const double e3 = std::abs(forecast::quantile_loss(3.7, 3.7, 0.9));
  const bool examples = e1 <= 1e-12 && e2 <= 1e-12 && e3 == 0.0;

  std::mt19937_64 rng(6);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 7, len = 20 + trial % 5;
    auto ds = gt::toy_dataset(n, len, 4, 1, 1, {1, 3}, 100 + trial);
    ds.quantiles = {0.1, 0.5, 0.9};
    std::bernoulli_distribution hide(0.2);
    for (std::size_t i = 0; i < ds.observed.size(); ++i) {
      if (hide(rng)) {
        ds.observed[i] = 0;
        ds.targets[i] = 0.0;
      }
    }
    std::vector<std::size_t> series(n), times;
    std::iota(series.begin(), series.end(), std::size_t{0});
    for (std::size_t t = 4; t <= len; ++t) {
      if (rng() % 2) times.push_back(t);
    }
    if (times.empty()) times.push_back(len / 2);
    forecast::QuantileForecast fc(series, times, 2, 3);
    std::uniform_real_distribution<double> f(0.0, 6.0);
    for (double& v : fc.values) v = f(rng);
    const std::uint64_t salt = rng();
    auto admit = [salt](std::size_t i, std::size_t t) { return ((i * 31 + t) ^ salt) % 3 != 0; };
    try {
      const auto rep = train::weighted_quantile_loss(ds, fc, {"seg", admit});
      const auto ref = gt::naive_weighted_ql(ds, fc, admit);
      for (std::size_t q = 0; q < 3; ++q) {
        worst = std::max(worst, std::abs(rep.per_quantile[q] - ref[q]));
      }
    } catch (const std::domain_error&) {
      --trial;
    }
  }
  return {examples && worst <= 1e-12,
          fmt("examples |err| %.1e %.1e %.1e; weighted QL vs brute force on 50 panels: max abs "
              "diff %.3e",
              e1, e2, e3, worst)};
}

// --- 7 ----------------------------------------------------------------------

Outcome cold_start_experiment() {
  Clock clock;
  forecast::ModelConfig m;
  m.encoder.dilations = {1, 2, 4, 8};
  m.encoder.channels = {16, 16, 16, 16};
  m.encoder.output_width = 16;
  m.gem.hidden_width = 32;
  m.gem.output_width = 16;
  m.decoder_hidden = 32;

  const char* names[] = {"base", "truth", "identity", "random"};
  std::map<std::string, std::array<double, 3>> sums;  // all, cold_start, oos
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    synth::SyntheticSpec sp;
    sp.seed = seed;
    const auto b = synth::generate(sp);
    const std::size_t n = sp.num_series;
    train::TrainConfig tc;
    tc.epochs = 30;
    tc.train_end = sp.train_end;
    tc.optimizer.learning_rate = 1e-2;
    tc.seed = seed;
    const auto segs = synth::standard_segments(b.labels, sp.context_length);
    const std::vector<std::vector<graph::SparseGraph>> variants{
        {}, {b.truth_graph}, {graph::identity_graph(n)}, {graph::random_graph(n, 10, 7 + seed)}};
    for (std::size_t v = 0; v < variants.size(); ++v) {
      const auto& gs = variants[v];
      const auto r = train::train(b.dataset, gs, tc, m);
      auto mm = m;
      mm.gem.num_graphs = gs.size();
      mm.bind(b.dataset);
      const auto rep = train::evaluate_weighted_ql(b.dataset, mm, r.params, gs, sp.train_end,
                                                   sp.length - sp.horizons.back() + 1, segs);
      const double all = rep.segment("all").overall, cold = rep.segment("cold_start").overall,
                   oos = rep.segment("oos").overall;
      auto& s = sums[names[v]];
      s[0] += all / 3.0;
      s[1] += cold / 3.0;
      s[2] += oos / 3.0;
      std::printf("  seed %llu %-8s all=%.4f cold=%.4f oos=%.4f (%.0f s elapsed)\n",
                  static_cast<unsigned long long>(seed), names[v], all, cold, oos, clock.seconds());
      std::fflush(stdout);
    }
  }
  const auto& base = sums["base"];
  auto gain = [&](const char* name, int seg) { return 1.0 - sums[name][seg] / base[seg]; };
  const double truth_all = gain("truth", 0), truth_cold = gain("truth", 1);
  const double idm = gain("identity", 0), rnd = gain("random", 0);
  const double secs = clock.seconds();
  const bool pass = truth_all >= 0.02 && truth_cold >= 0.05 && std::abs(idm) <= 0.02 &&
                    std::abs(rnd) <= 0.01 && secs < 1800.0;
  return {pass,
          fmt("3-seed mean WQL base %.4f (cold %.4f); truth %.4f (gain %.2f%%, cold gain %.2f%%); "
              "identity %.4f (%+.2f%%); random %.4f (%+.2f%%); %.0f s",
              base[0], base[1], sums["truth"][0], 100 * truth_all, 100 * truth_cold,
              sums["identity"][0], 100 * idm, sums["random"][0], 100 * rnd, secs)};
}

// --- 8 ----------------------------------------------------------------------

Outcome embedding_volatility() {
  synth::SyntheticSpec sp;
  const auto b = synth::generate(sp);
  forecast::ModelConfig m;
  m.encoder.dilations = {1, 2, 4, 8};
  m.encoder.channels = {16, 16, 16, 16};
  m.encoder.output_width = 16;
  m.gem.num_graphs = 0;
  m.decoder_hidden = 32;
  m.bind(b.dataset);
  construct::NeighborRuns runs;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    train::TrainConfig tc;
    tc.epochs = 30;
    tc.train_end = sp.train_end;
    tc.optimizer.learning_rate = 1e-2;
    tc.seed = 100 + seed;
    const auto pre = synth::pretrain_embeddings(b.dataset, m, tc);
    runs.push_back(construct::neighbor_lists(construct::pearson_knn_graph(pre.embeddings, 10)));
  }
  double sum = 0.0;
  for (graph::NodeId v = 0; v < sp.num_series; ++v) sum += construct::knn_stability(runs, v, 10);
  const double mean = sum / static_cast<double>(sp.num_series);
  const double baseline = construct::expected_random_stability(sp.num_series, 10, 3);
  return {mean > 0.01 && mean < 0.9,
          fmt("mean k=10 stability over 3 pretraining seeds %.4f (random baseline for 3 runs "
              "%.2e)",
              mean, baseline)};
}

// --- 9 ----------------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GEANN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cli_determinism() {
  const fs::path root =
      fs::temp_directory_path() / ("geann_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::string data =
      "--set num_series=80 --set num_clusters=8 --set length=60 --set train_end=48 "
      "--set context_length=12 --set horizons=1,2 --set truth_k=5";
  const std::string model =
      "--set dilations=1,2,4 --set channels=4,4,4 --set encoder_width=4 --set gcn_hidden=8 "
      "--set gnn_width=4 --set decoder_hidden=8 --set epochs=3 --set batch_size=32 "
      "--set top_k=5 --set train_end=48";
  std::string failure;
  for (const char* run : {"a", "b"}) {
    const std::string d = (root / run).string();
    const std::vector<std::string> steps{
        "gen-data " + data + " --seed 4 --out " + d + "/data",
        "pretrain --data " + d + "/data " + model + " --seed 1 --out " + d + "/pre1",
        "pretrain --data " + d + "/data " + model + " --seed 2 --out " + d + "/pre2",
        "build-graph --kind knn --k 5 --embeddings " + d + "/pre1/embeddings.csv --out " + d +
            "/knn1.csv",
        "build-graph --kind knn --k 5 --embeddings " + d + "/pre2/embeddings.csv --out " + d +
            "/knn2.csv",
        "build-graph --kind cooc --n 80 --k 5 --members " + d + "/data/memberships.csv --out " +
            d + "/cooc.csv",
        "build-graph --kind identity --n 80 --out " + d + "/id.csv",
        "build-graph --kind random --n 80 --k 5 --seed 3 --out " + d + "/rand.csv",
        "stability --runs " + d + "/knn1.csv," + d + "/knn2.csv --k 5 --out " + d + "/stab.csv",
        "graph-stats --graph " + d + "/knn1.csv --k 5 --out " + d + "/stats.csv",
        "train --data " + d + "/data --graph " + d + "/knn1.csv," + d + "/cooc.csv " + model +
            " --seed 1 --out " + d + "/model",
        "train --data " + d + "/data --graph " + d + "/rand.csv " + model + " --seed 1 --out " +
            d + "/model_rand",
        "evaluate --data " + d + "/data --model " + d + "/model --graph " + d + "/knn1.csv," + d +
            "/cooc.csv --labels " + d + "/data/labels.csv --out " + d + "/eval.csv",
        "evaluate --data " + d + "/data --model " + d + "/model_rand --graph " + d +
            "/rand.csv --out " + d + "/eval_rand.csv"};
    for (const auto& s : steps) {
      if (const int code = run_cli(s); code != 0 && failure.empty()) {
        failure = "exit " + std::to_string(code) + ": " + s.substr(0, s.find(' '));
      }
    }
  }
  std::size_t files = 0, csvs = 0, mismatched = 0;
  std::string first_bad;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), root / "a");
    const std::string x = slurp(entry.path());
    ++files;
    csvs += rel.extension() == ".csv";
    if (x.empty() || !fs::exists(root / "b" / rel) || x != slurp(root / "b" / rel)) {
      ++mismatched;
      if (first_bad.empty()) first_bad = rel.string();
    }
  }
  fs::remove_all(root);
  const bool pass = failure.empty() && mismatched == 0 && csvs >= 12;
  return {pass, fmt("%zu files (%zu CSV) compared across two runs, %zu differ%s%s%s", files, csvs,
                    mismatched, first_bad.empty() ? "" : " e.g. ", first_bad.c_str(),
                    failure.empty() ? "" : ("; " + failure).c_str())};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GEANN acceptance runner"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);
  util::retain_freed_memory();

  const std::vector<Criterion> criteria{
      {1, "gradient correctness", gradient_check},
      {2, "seed-node equivalence", seed_equivalence},
      {3, "subgraph size bound", subgraph_bound},
      {4, "stability metric", stability_suite},
      {5, "GCN reductions", gcn_reductions},
      {6, "quantile loss and weighted metric", quantile_metric},
      {7, "directional cold-start experiment", cold_start_experiment},
      {8, "embedding-graph volatility", embedding_volatility},
      {9, "CLI determinism", cli_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title,
                o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
