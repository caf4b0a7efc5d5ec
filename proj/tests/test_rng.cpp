#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "hpfolio/rng.hpp"

#include "oracles.hpp"

using hpfolio::rng::Stream;

TEST_CASE("same seed and address gives same draw", "[rng]") {
  const auto a = Stream::root(42).sub("param").sub("learning_rate");
  const auto b = Stream::root(42).sub("param").sub("learning_rate");
  for (std::uint64_t c = 0; c < 100; ++c) REQUIRE(a.bits(c) == b.bits(c));
}

TEST_CASE("substreams do not collide", "[rng]") {
  const auto root = Stream::root(7);
  REQUIRE(root.sub("alpha").key() != root.sub("beta").key());
  REQUIRE(root.sub(0).key() != root.sub(1).key());
  REQUIRE(Stream::root(1).key() != Stream::root(2).key());
}

TEST_CASE("unit draws live in [0,1) and look uniform", "[rng]") {
  const auto s = Stream::root(3).sub("u");
  std::vector<double> xs;
  for (std::uint64_t c = 0; c < 2000; ++c) {
    const double x = s.unit(c);
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    xs.push_back(x);
  }
  const double d = oracle::ks_statistic(xs, [](double x) { return x; });
  REQUIRE(d < oracle::ks_critical_001(xs.size()));
}

TEST_CASE("uniform_int covers inclusive bounds", "[rng]") {
  const auto s = Stream::root(11).sub("i");
  std::set<std::int64_t> seen;
  for (std::uint64_t c = 0; c < 500; ++c) {
    const auto v = s.uniform_int(c, 2, 4);
    REQUIRE(v >= 2);
    REQUIRE(v <= 4);
    seen.insert(v);
  }
  REQUIRE(seen == std::set<std::int64_t>{2, 3, 4});
}

TEST_CASE("normal draws have roughly standard moments", "[rng]") {
  const auto s = Stream::root(5).sub("n");
  std::vector<double> xs;
  for (std::uint64_t c = 0; c < 5000; ++c) xs.push_back(s.normal(c));
  REQUIRE(std::abs(oracle::mean(xs)) < 0.05);
  REQUIRE(std::abs(oracle::sample_sd(xs) - 1.0) < 0.05);
}

TEST_CASE("sample_distinct returns distinct indices in range", "[rng]") {
  auto seq = Stream::root(9).sub("pick").sequence();
  const auto picks = hpfolio::rng::sample_distinct(seq, 20, 8);
  REQUIRE(picks.size() == 8);
  std::set<std::size_t> unique(picks.begin(), picks.end());
  REQUIRE(unique.size() == 8);
  for (auto p : picks) REQUIRE(p < 20);
}
