#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "geann/construct/graph_construction.hpp"
#include "geann/forecast/dataset.hpp"
#include "geann/forecast/model.hpp"
#include "geann/graph/sparse_graph.hpp"
#include "geann/synth/synthetic.hpp"
#include "geann/train/trainer.hpp"
#include "geann/util/config.hpp"
#include "geann/util/memory.hpp"
#include "geann/util/text.hpp"

namespace fs = std::filesystem;
using namespace geann;

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

const std::set<std::string> kModelKeys = {"kernel_size",  "dilations",  "channels",
                                          "encoder_width", "gcn_layers", "gcn_hidden",
                                          "gnn_width",     "static_width", "decoder_hidden"};
const std::set<std::string> kTrainKeys = {"epochs",       "batch_size",   "learning_rate",
                                          "optimizer",    "weight_decay", "beta1",
                                          "beta2",        "epsilon",      "top_k",
                                          "train_end",    "validation_fraction",
                                          "creation_times_per_batch"};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  return in;
}

fs::path dataset_path(const std::string& data) {
  const fs::path p(data);
  return fs::is_directory(p) ? p / "dataset.bin" : p;
}

util::KeyValueConfig load_config(const std::string& file, const std::vector<std::string>& overrides) {
  util::KeyValueConfig kv;
  if (!file.empty()) kv = util::KeyValueConfig::load_file(file);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw util::ConfigError("--set expects key=value, got '" + o + "'");
    kv.set(o.substr(0, eq), o.substr(eq + 1));
  }
  return kv;
}

forecast::ModelConfig model_from(const util::KeyValueConfig& kv) {
  std::string text;
  for (const auto& [k, v] : kv.entries()) {
    if (kModelKeys.count(k)) text += k + "=" + v + "\n";
  }
  return forecast::ModelConfig::from_text(text);
}

train::TrainConfig train_from(const util::KeyValueConfig& kv, std::uint64_t seed) {
  train::TrainConfig tc;
  tc.epochs = kv.get_size("epochs", tc.epochs);
  tc.batch_size = kv.get_size("batch_size", tc.batch_size);
  tc.optimizer.learning_rate = kv.get_double("learning_rate", tc.optimizer.learning_rate);
  tc.optimizer.weight_decay = kv.get_double("weight_decay", tc.optimizer.weight_decay);
  tc.optimizer.beta1 = kv.get_double("beta1", tc.optimizer.beta1);
  tc.optimizer.beta2 = kv.get_double("beta2", tc.optimizer.beta2);
  tc.optimizer.epsilon = kv.get_double("epsilon", tc.optimizer.epsilon);
  const std::string kind = kv.get_string("optimizer", "adamw");
  if (kind == "adamw") {
    tc.optimizer.kind = train::OptimizerKind::kAdamW;
  } else if (kind == "sgd") {
    tc.optimizer.kind = train::OptimizerKind::kGradientDescent;
  } else {
    throw util::ConfigError("optimizer must be adamw or sgd, got '" + kind + "'");
  }
  tc.top_k = kv.get_size("top_k", tc.top_k);
  tc.train_end = kv.get_size("train_end", tc.train_end);
  tc.validation_fraction = kv.get_double("validation_fraction", tc.validation_fraction);
  tc.creation_times_per_batch = kv.get_size("creation_times_per_batch", tc.creation_times_per_batch);
  if (tc.epochs < 1 || tc.batch_size < 1) throw util::ConfigError("epochs and batch_size must be >= 1");
  if (!(tc.optimizer.learning_rate > 0.0)) throw util::ConfigError("learning_rate must be > 0");
  tc.seed = seed;
  return tc;
}

void require_keys(const util::KeyValueConfig& kv, std::initializer_list<const std::set<std::string>*> sets) {
  std::set<std::string> allowed;
  for (const auto* s : sets) allowed.insert(s->begin(), s->end());
  kv.require_known(allowed);
}

std::vector<graph::SparseGraph> load_graphs(const std::vector<std::string>& paths) {
  std::vector<graph::SparseGraph> graphs;
  for (const auto& p : paths) graphs.push_back(graph::load_edge_list_file(p));
  return graphs;
}

void save_model(const fs::path& dir, const forecast::ModelConfig& cfg,
                const forecast::ParameterStore& params) {
  auto cfg_out = open_out(dir / "model.cfg");
  cfg_out << cfg.to_text();
  auto p_out = open_out(dir / "params.bin");
  params.save(p_out);
}

void write_epoch_loss(const fs::path& path, const std::vector<double>& epoch_loss) {
  auto out = open_out(path);
  out << "epoch,loss\n";
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) {
    out << e + 1 << ',' << util::format_double(epoch_loss[e]) << '\n';
  }
}

// --- subcommands -----------------------------------------------------------

struct Common {
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void cmd_gen_data(const std::string& spec_file, const std::vector<std::string>& sets,
                  const Common& common, const std::string& out_dir) {
  const auto kv = load_config(spec_file, sets);
  auto spec = synth::SyntheticSpec::from_config(kv);
  if (common.seed_given) spec.seed = common.seed;
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw util::ConfigError(e.what());
  }
  const auto bundle = synth::generate(spec);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  forecast::save_dataset_file((dir / "dataset.bin").string(), bundle.dataset);
  graph::write_edge_list_file((dir / "truth_graph.csv").string(), bundle.truth_graph);
  auto m = open_out(dir / "memberships.csv");
  construct::write_memberships(m, bundle.memberships);
  auto l = open_out(dir / "labels.csv");
  synth::write_labels(l, bundle.labels);
  auto s = open_out(dir / "spec.cfg");
  s << spec.to_text();
}

void cmd_build_graph(const std::string& kind, std::size_t n, std::size_t k,
                     const std::string& embeddings, const std::string& members,
                     const Common& common, const std::string& out) {
  graph::SparseGraph g;
  if (kind == "identity" || kind == "random") {
    if (n == 0) throw UsageError("--n is required for kind " + kind);
    g = kind == "identity" ? graph::identity_graph(n) : graph::random_graph(n, k, common.seed);
  } else if (kind == "knn") {
    if (embeddings.empty()) throw UsageError("--embeddings is required for kind knn");
    auto in = open_in(embeddings);
    const auto emb = construct::load_embeddings(in);
    if (n != 0 && n != emb.rows()) throw UsageError("--n disagrees with embedding row count");
    g = construct::pearson_knn_graph(emb, k);
  } else {
    if (members.empty() || n == 0) throw UsageError("--members and --n are required for kind cooc");
    auto in = open_in(members);
    g = construct::cooccurrence_graph(construct::load_memberships(in, n), n, k);
  }
  auto o = open_out(out);
  graph::write_edge_list(o, g);
}

void cmd_pretrain(const std::string& data, const std::string& config,
                  const std::vector<std::string>& sets, const Common& common,
                  const std::string& out_dir) {
  const auto kv = load_config(config, sets);
  require_keys(kv, {&kModelKeys, &kTrainKeys});
  auto model = model_from(kv);
  model.gem.num_graphs = 0;
  const auto tc = train_from(kv, common.seed);
  const auto ds = forecast::load_dataset_file(dataset_path(data).string());
  const auto pre = synth::pretrain_embeddings(ds, model, tc);
  model.bind(ds);
  const fs::path dir(out_dir);
  save_model(dir, model, pre.params);
  auto e = open_out(dir / "embeddings.csv");
  construct::write_embeddings(e, pre.embeddings);
}

void cmd_train(const std::string& data, const std::vector<std::string>& graph_files,
               const std::string& config, const std::vector<std::string>& sets,
               const Common& common, const std::string& out_dir) {
  const auto kv = load_config(config, sets);
  require_keys(kv, {&kModelKeys, &kTrainKeys});
  auto model = model_from(kv);
  const auto tc = train_from(kv, common.seed);
  const auto ds = forecast::load_dataset_file(dataset_path(data).string());
  const auto graphs = load_graphs(graph_files);
  const auto result = train::train(ds, graphs, tc, model);
  model.gem.num_graphs = graphs.size();
  model.bind(ds);
  const fs::path dir(out_dir);
  save_model(dir, model, result.params);
  auto log = open_out(dir / "train_log.csv");
  train::write_train_log(log, result.log);
  write_epoch_loss(dir / "epoch_loss.csv", result.epoch_loss);
}

void cmd_evaluate(const std::string& data, const std::string& model_dir,
                  const std::vector<std::string>& graph_files, std::size_t begin, std::size_t end,
                  const std::string& labels_file, const std::string& out) {
  const auto ds = forecast::load_dataset_file(dataset_path(data).string());
  std::stringstream cfg_text;
  cfg_text << open_in(fs::path(model_dir) / "model.cfg").rdbuf();
  const auto model = forecast::ModelConfig::from_text(cfg_text.str());
  auto p_in = open_in(fs::path(model_dir) / "params.bin");
  const auto params = forecast::ParameterStore::load(p_in);
  const auto graphs = load_graphs(graph_files);
  if (graphs.size() != model.gem.num_graphs) {
    throw UsageError("model expects " + std::to_string(model.gem.num_graphs) + " graphs, got " +
                     std::to_string(graphs.size()));
  }
  std::string labels_path = labels_file;
  if (labels_path.empty() && fs::is_directory(data) && fs::exists(fs::path(data) / "labels.csv")) {
    labels_path = (fs::path(data) / "labels.csv").string();
  }
  std::vector<train::Segment> segments;
  if (!labels_path.empty()) {
    auto in = open_in(labels_path);
    segments = synth::standard_segments(synth::load_labels(in, ds.num_series), ds.context_length);
  }
  if (end == 0) end = ds.length - ds.max_horizon() + 1;
  if (begin == 0) begin = ds.context_length;
  const auto report = train::evaluate_weighted_ql(ds, model, params, graphs, begin, end, segments);
  auto o = open_out(out);
  train::write_eval_report(o, report);
}

void cmd_stability(const std::vector<std::string>& runs, std::size_t k, const std::string& out) {
  if (runs.size() < 2) throw UsageError("--runs needs at least two graphs");
  construct::NeighborRuns lists;
  std::size_t n = 0;
  for (const auto& r : runs) {
    const auto g = graph::load_edge_list_file(r);
    if (!lists.empty() && g.num_nodes() != n) throw UsageError("runs have different node counts");
    n = g.num_nodes();
    lists.push_back(construct::neighbor_lists(g));
  }
  auto o = open_out(out);
  o << "node,stability\n";
  for (graph::NodeId v = 0; v < n; ++v) {
    o << v << ',' << util::format_double(construct::knn_stability(lists, v, k)) << '\n';
  }
}

void cmd_graph_stats(const std::string& graph_file, std::size_t k, const std::string& out) {
  const auto g = graph::load_edge_list_file(graph_file);
  auto o = open_out(out);
  construct::write_neighbor_scores(o, construct::neighbor_score_stats(g, k));
}

}  // namespace

int main(int argc, char** argv) {
  util::retain_freed_memory();
  CLI::App app{"geann: graph-ensemble quantile forecasting toolkit"};
  app.require_subcommand(1);
  Common common;

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Random seed")->each([&](const std::string&) {
      common.seed_given = true;
    });
  };

  std::string spec_file, out, data, config, kind, embeddings, members, model_dir, labels_file;
  std::vector<std::string> sets, graphs, runs;
  std::size_t n = 0, k = 10, begin = 0, end = 0;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic clustered panel");
  gen->add_option("--spec", spec_file, "Synthetic spec (key=value)")->check(CLI::ExistingFile);
  gen->add_option("--set", sets, "Override a spec key (key=value)");
  gen->add_option("--out", out, "Output directory")->required();
  add_seed(gen);

  auto* bg = app.add_subcommand("build-graph", "Build a sparse graph");
  bg->add_option("--kind", kind, "knn | cooc | identity | random")
      ->required()
      ->check(CLI::IsMember({"knn", "cooc", "identity", "random"}));
  bg->add_option("--n", n, "Number of nodes");
  bg->add_option("--k", k, "Neighbours per node")->check(CLI::PositiveNumber);
  bg->add_option("--embeddings", embeddings, "Embedding CSV (knn)")->check(CLI::ExistingFile);
  bg->add_option("--members", members, "Membership CSV (cooc)")->check(CLI::ExistingFile);
  bg->add_option("--out", out, "Output edge list")->required();
  add_seed(bg);

  auto* pre = app.add_subcommand("pretrain", "Train the graph-free model and export embeddings");
  pre->add_option("--data", data, "Dataset file or directory")->required()->check(CLI::ExistingPath);
  pre->add_option("--config", config, "Model/training config")->check(CLI::ExistingFile);
  pre->add_option("--set", sets, "Override a config key (key=value)");
  pre->add_option("--out", out, "Output directory")->required();
  add_seed(pre);

  auto* tr = app.add_subcommand("train", "Train a forecaster");
  tr->add_option("--data", data, "Dataset file or directory")->required()->check(CLI::ExistingPath);
  tr->add_option("--graph", graphs, "Edge-list file(s); none trains the graph-free model")
      ->delimiter(',')
      ->check(CLI::ExistingFile);
  tr->add_option("--config", config, "Model/training config")->check(CLI::ExistingFile);
  tr->add_option("--set", sets, "Override a config key (key=value)");
  tr->add_option("--out", out, "Output directory")->required();
  add_seed(tr);

  auto* ev = app.add_subcommand("evaluate", "Weighted quantile loss report");
  ev->add_option("--data", data, "Dataset file or directory")->required()->check(CLI::ExistingPath);
  ev->add_option("--model", model_dir, "Directory written by train")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--graph", graphs, "Edge-list file(s) used in training")
      ->delimiter(',')
      ->check(CLI::ExistingFile);
  ev->add_option("--begin", begin, "First creation time (default C)");
  ev->add_option("--end", end, "End of creation times, exclusive (default T - max horizon + 1)");
  ev->add_option("--labels", labels_file, "Series labels CSV")->check(CLI::ExistingFile);
  ev->add_option("--out", out, "Report CSV")->required();
  add_seed(ev);

  auto* st = app.add_subcommand("stability", "Per-node kNN stability across runs");
  st->add_option("--runs", runs, "Edge-list files, one per run")
      ->required()
      ->delimiter(',')
      ->check(CLI::ExistingFile);
  st->add_option("--k", k, "Neighbours per node")->check(CLI::PositiveNumber);
  st->add_option("--out", out, "Output CSV")->required();
  add_seed(st);

  auto* gs = app.add_subcommand("graph-stats", "Mean/std of each node's top-k edge weights");
  gs->add_option("--graph", data, "Edge-list file")->required()->check(CLI::ExistingFile);
  gs->add_option("--k", k, "Neighbours per node")->check(CLI::PositiveNumber);
  gs->add_option("--out", out, "Output CSV")->required();
  add_seed(gs);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      cmd_gen_data(spec_file, sets, common, out);
    } else if (bg->parsed()) {
      cmd_build_graph(kind, n, k, embeddings, members, common, out);
    } else if (pre->parsed()) {
      cmd_pretrain(data, config, sets, common, out);
    } else if (tr->parsed()) {
      cmd_train(data, graphs, config, sets, common, out);
    } else if (ev->parsed()) {
      cmd_evaluate(data, model_dir, graphs, begin, end, labels_file, out);
    } else if (st->parsed()) {
      cmd_stability(runs, k, out);
    } else if (gs->parsed()) {
      cmd_graph_stats(data, k, out);
    }
  } catch (const util::ConfigError& e) {
    std::cerr << "geann: config error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "geann: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "geann: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
