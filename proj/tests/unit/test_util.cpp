#include <doctest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "geann/util/config.hpp"
#include "geann/util/parallel.hpp"
#include "geann/util/text.hpp"

using namespace geann::util;

TEST_SUITE("util") {

TEST_CASE("key=value parsing") {
  const auto kv = KeyValueConfig::parse(
      "# comment\n epochs = 12 \r\n\nlearning_rate=0.005\ndilations=1, 2,4\nname=abc\n");
  CHECK(kv.get_size("epochs", 0) == 12);
  CHECK(kv.get_double("learning_rate", 0.0) == 0.005);
  CHECK(kv.get_size_list("dilations", {}) == std::vector<std::size_t>{1, 2, 4});
  CHECK(kv.get_string("name", "") == "abc");
  CHECK(kv.get_size("missing", 7) == 7);
  CHECK(kv.get_double_list("q", {0.5}) == std::vector<double>{0.5});

  CHECK_THROWS_AS(KeyValueConfig::parse("novalue\n"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("=3\n"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("epochs=-1\n").get_size("epochs", 0), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("lr=fast\n").get_double("lr", 0.0), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("d=1,,2\n").get_size_list("d", {}), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::load_file("/nonexistent/geann.cfg"), ConfigError);
}

TEST_CASE("unknown keys are rejected by name") {
  auto kv = KeyValueConfig::parse("epochs=3\nepoch=4\n");
  CHECK_NOTHROW(KeyValueConfig::parse("epochs=3").require_known({"epochs"}));
  try {
    kv.require_known({"epochs"});
    FAIL("unknown key accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
  kv.set("epochs", "9");
  CHECK(kv.get_size("epochs", 0) == 9);
}

TEST_CASE("text helpers") {
  std::string line = "a,b\r";
  strip_cr(line);
  CHECK(line == "a,b");
  CHECK(trim("  x y \t") == "x y");
  CHECK(split("1,,3", ',') == std::vector<std::string_view>{"1", "", "3"});
  std::size_t n = 0;
  CHECK(parse_size("42", n));
  CHECK(n == 42);
  CHECK_FALSE(parse_size("-1", n));
  CHECK_FALSE(parse_size("4x", n));
  CHECK_FALSE(parse_size("", n));
  long long i = 0;
  CHECK(parse_int("-17", i));
  CHECK(i == -17);
  double d = 0;
  CHECK(parse_double("2.5e-3", d));
  CHECK(d == 2.5e-3);
  CHECK_FALSE(parse_double("1.0.0", d));
}

TEST_CASE("format_double round-trips") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5) == "-2.5");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 1000; ++k) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    double back = 0.0;
    REQUIRE(parse_double(format_double(v), back));
    CHECK(back == v);
  }
  double back = 0.0;
  REQUIRE(parse_double(format_double(std::numeric_limits<double>::denorm_min()), back));
  CHECK(back == std::numeric_limits<double>::denorm_min());
}

TEST_CASE("parallel_for visits every index once") {
  for (std::size_t n : {0u, 1u, 7u, 1000u}) {
    std::vector<std::atomic<int>> hits(n);
    parallel_for(n, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  CHECK(thread_count() >= 1);
  CHECK_THROWS(parallel_for(10, [](std::size_t i) {
    if (i == 3) throw std::runtime_error("boom");
  }));
}

}  // TEST_SUITE
