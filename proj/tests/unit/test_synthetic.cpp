#include <doctest.h>

#include <cmath>
#include <sstream>

#include "geann/construct/graph_construction.hpp"
#include "geann/synth/synthetic.hpp"
#include "geann/util/config.hpp"
#include "support/toy.hpp"

using namespace geann::synth;
using geann::numeric::Tensor;

namespace {

SyntheticSpec small_spec(std::uint64_t seed) {
  SyntheticSpec s;
  s.num_series = 60;
  s.length = 60;
  s.num_clusters = 6;
  s.train_end = 48;
  s.context_length = 12;
  s.truth_k = 5;
  s.seed = seed;
  return s;
}

double row_corr(const geann::forecast::TimeSeriesDataset& ds, std::size_t a, std::size_t b) {
  return geann::construct::abs_pearson(&ds.targets[a * ds.length], &ds.targets[b * ds.length],
                                       ds.length);
}

geann::forecast::ModelConfig small_model(const geann::forecast::TimeSeriesDataset& ds) {
  geann::forecast::ModelConfig cfg;
  cfg.encoder.dilations = {1, 2, 4};
  cfg.encoder.channels = {8, 8, 8};
  cfg.encoder.output_width = 4;
  cfg.gem.num_graphs = 0;
  cfg.decoder_hidden = 16;
  cfg.bind(ds);
  return cfg;
}

geann::train::TrainConfig small_train(std::uint64_t seed, std::size_t train_end) {
  geann::train::TrainConfig tc;
  tc.epochs = 5;
  tc.batch_size = 16;
  tc.seed = seed;
  tc.train_end = train_end;
  tc.optimizer.learning_rate = 1e-2;
  tc.creation_times_per_batch = 4;
  return tc;
}

}  // namespace

TEST_SUITE("synthetic") {

TEST_CASE("noise-free series with equal scale in one cluster are identical") {
  auto spec = small_spec(1);
  spec.noise_scale = 0.0;
  spec.scale_spread = 0.0;
  spec.cold_start_fraction = spec.oos_fraction = 0.0;
  const auto b = generate(spec);
  const auto& ds = b.dataset;
  REQUIRE(b.cluster[0] == b.cluster[6]);
  for (std::size_t t = 0; t < ds.length; ++t) CHECK(ds.y(0, t) == ds.y(6, t));
  bool differs = false;
  for (std::size_t t = 0; t < ds.length; ++t) differs |= ds.y(0, t) != ds.y(1, t);
  CHECK(differs);
}

TEST_CASE("same seed gives the same bundle") {
  const auto a = generate(small_spec(5));
  const auto b = generate(small_spec(5));
  CHECK(a.dataset == b.dataset);
  CHECK(a.truth_graph == b.truth_graph);
  CHECK(a.labels == b.labels);
  CHECK(a.memberships.attributes == b.memberships.attributes);
  CHECK_FALSE(generate(small_spec(6)).dataset == a.dataset);
}

TEST_CASE("truth graph is intra-cluster with fixed in-degree") {
  const auto b = generate(small_spec(2));
  for (const auto& e : b.truth_graph.edges()) {
    CHECK(b.cluster[e.src] == b.cluster[e.dst]);
    CHECK(e.src != e.dst);
    CHECK(e.weight == 1.0);
  }
  for (geann::graph::NodeId v = 0; v < 60; ++v) CHECK(b.truth_graph.in_degree(v) == 5);
  for (std::size_t i = 0; i < 60; ++i) {
    CHECK(b.memberships.attributes[i] == std::vector<std::uint32_t>{b.cluster[i]});
  }
}

TEST_CASE("cold-start and stock-out masks") {
  auto spec = small_spec(3);
  spec.num_series = 200;
  spec.cold_start_fraction = 0.2;
  spec.oos_fraction = 0.2;
  const auto b = generate(spec);
  const auto& ds = b.dataset;
  std::size_t cold = 0, oos = 0;
  for (std::size_t i = 0; i < ds.num_series; ++i) {
    const auto& l = b.labels[i];
    std::size_t flips = 0;
    for (std::size_t t = 0; t < ds.length; ++t) {
      CHECK(ds.y(i, t) >= 0.0);
      if (t > 0 && ds.x(i, t, 0) != ds.x(i, t - 1, 0)) ++flips;
    }
    if (l.kind == SeriesKind::kColdStart) {
      ++cold;
      CHECK(flips == 1);
      CHECK(l.start >= 48 - 48 * 3 / 10);
      CHECK(l.start < 48);
      for (std::size_t t = 0; t < ds.length; ++t) {
        const bool before = t < l.start;
        CHECK(ds.x(i, t, 0) == (before ? 0.0 : 1.0));
        if (before) {
          CHECK(ds.y(i, t) == 0.0);
          CHECK_FALSE(ds.is_observed(i, t));
        }
      }
    } else {
      CHECK(flips == 0);
      CHECK(ds.x(i, 0, 0) == 1.0);
    }
    if (l.kind == SeriesKind::kOutOfStock) {
      ++oos;
      CHECK(l.end - l.start >= 4);
      CHECK(l.end - l.start <= 8);
      CHECK(l.end <= ds.length);
      for (std::size_t t = 0; t < ds.length; ++t) {
        const bool inside = t >= l.start && t < l.end;
        CHECK(ds.x(i, t, 1) == (inside ? 1.0 : 0.0));
        if (inside) CHECK(ds.y(i, t) == 0.0);
        CHECK(ds.is_observed(i, t) == !inside);
      }
    }
  }
  CHECK(cold == 40);
  CHECK(oos == 40);
}

TEST_CASE("noise-free clusters are separable by correlation") {
  auto spec = small_spec(4);
  spec.noise_scale = 0.0;
  spec.cold_start_fraction = spec.oos_fraction = 0.0;
  const auto b = generate(spec);
  double min_intra = 1.0, max_inter = 0.0;
  for (std::size_t i = 0; i < 60; ++i) {
    for (std::size_t j = i + 1; j < 60; ++j) {
      const double c = row_corr(b.dataset, i, j);
      if (b.cluster[i] == b.cluster[j]) {
        min_intra = std::min(min_intra, c);
      } else {
        max_inter = std::max(max_inter, c);
      }
    }
  }
  CHECK(max_inter < min_intra);
}

TEST_CASE("spec validation and config parsing") {
  auto spec = small_spec(0);
  spec.num_clusters = 61;
  CHECK_THROWS(generate(spec));
  spec = small_spec(0);
  spec.cold_start_fraction = 1.0;
  CHECK_THROWS(spec.validate());

  const auto kv = geann::util::KeyValueConfig::parse("num_series=30\nnum_clusters=3\nnoise_scale=0.5\n");
  const auto parsed = SyntheticSpec::from_config(kv);
  CHECK(parsed.num_series == 30);
  CHECK(parsed.noise_scale == 0.5);
  const auto again = SyntheticSpec::from_config(geann::util::KeyValueConfig::parse(parsed.to_text()));
  CHECK(again.to_text() == parsed.to_text());
  CHECK_THROWS_AS(SyntheticSpec::from_config(geann::util::KeyValueConfig::parse("clusters=3\n")),
                  geann::util::ConfigError);
}

TEST_CASE("labels file round trip and errors") {
  const auto b = generate(small_spec(7));
  std::stringstream buf;
  write_labels(buf, b.labels);
  CHECK(load_labels(buf, 60) == b.labels);
  std::istringstream bad_kind("series,kind,start,end\n0,promo,1,2\n");
  CHECK_THROWS_AS(load_labels(bad_kind, 3), geann::graph::ParseError);
  std::istringstream dup("0,normal,0,0\n0,normal,0,0\n");
  CHECK_THROWS_AS(load_labels(dup, 3), geann::graph::ParseError);
  std::istringstream range("5,normal,0,0\n");
  CHECK_THROWS_AS(load_labels(range, 3), geann::graph::ParseError);
}

TEST_CASE("segment filters") {
  std::vector<SeriesLabel> labels(3);
  labels[1] = {SeriesKind::kColdStart, 40, 40};
  labels[2] = {SeriesKind::kOutOfStock, 20, 25};
  const auto cold = cold_start_segment(labels, 8);
  CHECK(cold.filter(1, 47));
  CHECK_FALSE(cold.filter(1, 48));
  CHECK_FALSE(cold.filter(0, 41));
  const auto oos = oos_segment(labels, 8);
  CHECK_FALSE(oos.filter(2, 20));
  CHECK(oos.filter(2, 21));
  CHECK(oos.filter(2, 32));
  CHECK_FALSE(oos.filter(2, 33));
  CHECK(standard_segments(labels, 8).size() == 2);
}

TEST_CASE("encoder trajectory equals per-time encodings") {
  const auto ds = geann::testing::toy_dataset(7, 30, 8, 2, 1, {1}, 3);
  const auto cfg = geann::testing::toy_model(ds, 0);
  const auto params = geann::forecast::init_parameters(cfg, 4);
  const auto traj = encoder_trajectory(ds, cfg, params, 10, 14);
  REQUIRE(traj.rows() == 7);
  REQUIRE(traj.cols() == 8 * 5);
  for (std::size_t t = 10; t <= 14; ++t) {
    const Tensor h = geann::forecast::encode_temporal(ds, t, params, cfg);
    for (std::size_t i = 0; i < 7; ++i) {
      for (std::size_t c = 0; c < 8; ++c) {
        CHECK(std::abs(traj(i, (t - 10) * 8 + c) - h(i, c)) < 1e-12);
      }
    }
  }
  CHECK_THROWS(encoder_trajectory(ds, cfg, params, 7, 10));
}

TEST_CASE("pretrained embeddings: shape, determinism, cluster recovery") {
  auto spec = small_spec(9);
  spec.noise_scale = 0.0;
  const auto b = generate(spec);
  const auto cfg = small_model(b.dataset);
  const auto a = pretrain_embeddings(b.dataset, cfg, small_train(1, spec.train_end));
  CHECK(a.embeddings.rows() == 60);
  CHECK(a.embeddings.cols() == 4 * (spec.train_end - spec.context_length + 1));
  const auto again = pretrain_embeddings(b.dataset, cfg, small_train(1, spec.train_end));
  CHECK(a.params == again.params);
  CHECK(std::equal(a.embeddings.values().begin(), a.embeddings.values().end(),
                   again.embeddings.values().begin()));

  const std::size_t k = 5;
  const auto g = geann::construct::pearson_knn_graph(a.embeddings, k);
  std::size_t same = 0;
  for (const auto& e : g.edges()) same += b.cluster[e.src] == b.cluster[e.dst];
  const double hit_rate = static_cast<double>(same) / static_cast<double>(g.num_edges());
  const double chance = 9.0 / 59.0;
  MESSAGE("same-cluster neighbour rate " << hit_rate << " vs chance " << chance);
  CHECK(hit_rate > 2.0 * chance);
}

}  // TEST_SUITE
