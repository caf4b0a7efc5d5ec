#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "hpfolio/corpus.hpp"
#include "hpfolio/transfer.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

using namespace hpfolio;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

TEST_CASE("identical rows share the full top-k", "[transfer]") {
  std::mt19937 gen(1);
  auto rows = testutil::random_rows(gen, 1, 30);
  rows.push_back(rows[0]);
  const auto o = transfer::topk_overlap(testutil::make_matrix(rows), 10);
  REQUIRE(o.at(0, 1) == 10);
  REQUIRE(o.at(1, 0) == 10);
  REQUIRE(o.at(0, 0) == -1);  // diagonal not considered
  REQUIRE(o.mean == 10.0);
}

TEST_CASE("reverse-ranked rows share nothing at the extremes", "[transfer]") {
  std::vector<double> row1(100);
  for (std::size_t j = 0; j < 100; ++j) row1[j] = static_cast<double>(j) / 99.0;
  auto row2 = row1;
  std::reverse(row2.begin(), row2.end());
  const auto o = transfer::topk_overlap(testutil::make_matrix({row1, row2}), 10);
  REQUIRE(o.at(0, 1) == 0);
}

TEST_CASE("overlap matches brute-force set intersection", "[transfer]") {
  std::mt19937 gen(2);
  for (int rep = 0; rep < 10; ++rep) {
    const auto rows = testutil::random_rows(gen, 4, 30, /*with_ties=*/rep % 2 == 1);
    const auto m = testutil::make_matrix(rows);
    const auto o = transfer::topk_overlap(m, 10, /*jobs=*/2);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        if (i == j) continue;
        const auto expected =
            oracle::set_overlap(oracle::topk_naive(rows[i], 10), oracle::topk_naive(rows[j], 10));
        REQUIRE(o.at(i, j) == static_cast<int>(expected));
        REQUIRE(o.at(i, j) == o.at(j, i));
      }
  }
}

TEST_CASE("overlap validates k and full observation", "[transfer]") {
  const auto m = testutil::make_matrix({{0.1, 0.2}, {0.3, 0.4}});
  REQUIRE_THROWS_WITH(transfer::topk_overlap(m, 3), ContainsSubstring("k out of range"));
  REQUIRE_THROWS_WITH(transfer::topk_overlap(m, 0), ContainsSubstring("k out of range"));

  std::vector<double> scores = {0.1, corpus::kMissing, 0.3, 0.4};
  corpus::EvalMatrix gap({testutil::meta("t1"), testutil::meta("t2")}, testutil::config_ids(2),
                         std::move(scores));
  REQUIRE_THROWS_WITH(transfer::topk_overlap(gap, 1), ContainsSubstring("missing"));
}

TEST_CASE("spearman hits the textbook extremes", "[transfer]") {
  std::vector<double> a = {0.1, 0.4, 0.5, 0.8, 0.9};
  auto b = a;
  const auto m1 = testutil::make_matrix({a, b});
  REQUIRE_THAT(transfer::spearman_full_rankings(m1).at(0, 1), WithinAbs(1.0, 1e-12));
  std::reverse(b.begin(), b.end());
  const auto m2 = testutil::make_matrix({a, b});
  REQUIRE_THAT(transfer::spearman_full_rankings(m2).at(0, 1), WithinAbs(-1.0, 1e-12));
}

TEST_CASE("spearman matches the naive rank-then-pearson oracle", "[transfer]") {
  std::mt19937 gen(3);
  for (int rep = 0; rep < 15; ++rep) {
    const auto rows = testutil::random_rows(gen, 5, 14, /*with_ties=*/true);
    const auto m = testutil::make_matrix(rows);
    const auto s = transfer::spearman_full_rankings(m, 2);
    std::vector<double> values;
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = i + 1; j < 5; ++j) {
        const double expected = oracle::spearman_naive(rows[i], rows[j]);
        REQUIRE_THAT(s.at(i, j), WithinAbs(expected, 1e-12));
        REQUIRE(s.at(i, j) >= -1.0);
        REQUIRE(s.at(i, j) <= 1.0);
        values.push_back(s.at(i, j));
      }
    REQUIRE_THAT(s.mean, WithinAbs(oracle::mean(values), 1e-12));
    REQUIRE_THAT(s.sd, WithinAbs(oracle::sample_sd(values), 1e-12));
  }
}

TEST_CASE("spearman is invariant under increasing transforms", "[transfer]") {
  std::mt19937 gen(4);
  auto rows = testutil::random_rows(gen, 3, 12);
  const auto before = transfer::spearman_full_rankings(testutil::make_matrix(rows));
  for (auto& row : rows)
    for (auto& v : row) v = std::log(v + 2.0) * 10.0;
  const auto after = transfer::spearman_full_rankings(testutil::make_matrix(rows));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) REQUIRE_THAT(after.at(i, j), WithinAbs(before.at(i, j), 1e-12));
}

TEST_CASE("spearman rejects a constant row", "[transfer]") {
  const auto m = testutil::make_matrix({{0.5, 0.5, 0.5}, {0.1, 0.2, 0.3}});
  REQUIRE_THROWS_WITH(transfer::spearman_full_rankings(m), ContainsSubstring("constant row"));
}

TEST_CASE("grouped overlap averages the pairwise matrix", "[transfer]") {
  SECTION("two identical rows in one group give a mean of k") {
    std::mt19937 gen(5);
    auto rows = testutil::random_rows(gen, 1, 25);
    rows.push_back(rows[0]);
    std::vector<corpus::TaskMeta> tasks = {testutil::meta("t1", "a", "H1"),
                                           testutil::meta("t2", "b", "H1")};
    std::vector<double> scores;
    for (const auto& r : rows) scores.insert(scores.end(), r.begin(), r.end());
    corpus::EvalMatrix m(tasks, testutil::config_ids(25), scores);
    const auto g = transfer::grouped_overlap(m, {"subset_id"}, 10);
    REQUIRE(g.group_labels == std::vector<std::string>{"H1"});
    REQUIRE_THAT(g.at(0, 0), WithinAbs(10.0, 1e-12));
  }
  SECTION("size-one groups have no self-pairs") {
    const auto m = testutil::make_matrix({{0.1, 0.9, 0.5}, {0.8, 0.2, 0.6}});
    const auto g = transfer::grouped_overlap(m, {"target"}, 2);  // unique targets
    REQUIRE(g.group_labels.size() == 2);
    REQUIRE(std::isnan(g.at(0, 0)));
    REQUIRE(std::isnan(g.at(1, 1)));
    REQUIRE_FALSE(std::isnan(g.at(0, 1)));
  }
}

TEST_CASE("grouped overlap reproduces hand-aggregated means on a 3-group corpus", "[transfer]") {
  std::mt19937 gen(6);
  const std::size_t per_group = 3, n_configs = 40;
  std::vector<corpus::TaskMeta> tasks;
  std::vector<std::vector<double>> rows;
  for (int gidx = 0; gidx < 3; ++gidx)
    for (std::size_t i = 0; i < per_group; ++i) {
      auto t = testutil::meta("g" + std::to_string(gidx) + "_t" + std::to_string(i));
      t.n_features = 10 * (gidx + 1);
      t.subset_id = "H1";
      tasks.push_back(t);
      rows.push_back(testutil::random_rows(gen, 1, n_configs)[0]);
    }
  std::vector<double> scores;
  for (const auto& r : rows) scores.insert(scores.end(), r.begin(), r.end());
  corpus::EvalMatrix m(tasks, testutil::config_ids(n_configs), scores);

  const std::size_t k = 10;
  const auto g = transfer::grouped_overlap(m, {"n_features"}, k);
  REQUIRE(g.group_labels == std::vector<std::string>{"10", "20", "30"});

  const auto pairwise = transfer::topk_overlap(m, k);
  for (std::size_t ga = 0; ga < 3; ++ga)
    for (std::size_t gb = 0; gb < 3; ++gb) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = 0; j < 9; ++j) {
          if (i == j) continue;
          if (i / per_group != ga || j / per_group != gb) continue;
          if (ga == gb && i > j) continue;
          sum += pairwise.at(i, j);
          ++count;
        }
      REQUIRE(g.n_pairs[ga * 3 + gb] == count);
      REQUIRE_THAT(g.at(ga, gb), WithinAbs(sum / static_cast<double>(count), 1e-12));
    }
}

TEST_CASE("a single all-encompassing group equals the ungrouped mean", "[transfer]") {
  std::mt19937 gen(7);
  const auto m = testutil::make_matrix(testutil::random_rows(gen, 6, 30));
  const auto g = transfer::grouped_overlap(m, {"subset_id"}, 10);  // every task is H1
  const auto o = transfer::topk_overlap(m, 10);
  REQUIRE(g.group_labels.size() == 1);
  REQUIRE_THAT(g.at(0, 0), WithinAbs(o.mean, 1e-12));
}

TEST_CASE("external-source tasks form their own group", "[transfer]") {
  std::mt19937 gen(8);
  const auto rows = testutil::random_rows(gen, 4, 20);
  std::vector<corpus::TaskMeta> tasks = {
      testutil::meta("m1", "a", "H1", 172), testutil::meta("m2", "b", "H1", 172),
      testutil::meta("x1", "c", "H1", 30, corpus::Source::external),
      testutil::meta("x2", "d", "H1", 40, corpus::Source::external)};
  std::vector<double> scores;
  for (const auto& r : rows) scores.insert(scores.end(), r.begin(), r.end());
  corpus::EvalMatrix m(tasks, testutil::config_ids(20), scores);
  const auto g = transfer::grouped_overlap(m, {"n_features", "subset_id"}, 5);
  REQUIRE(g.group_labels == std::vector<std::string>{"172|H1", "external"});
}

TEST_CASE("csv outputs leave the diagonal blank", "[transfer]") {
  std::mt19937 gen(9);
  const auto m = testutil::make_matrix(testutil::random_rows(gen, 3, 15));
  const auto csv = transfer::serialize_overlap_csv(transfer::topk_overlap(m, 5));
  REQUIRE_THAT(csv, ContainsSubstring("task_id,t1,t2,t3"));
  REQUIRE_THAT(csv, ContainsSubstring("t1,,"));
  const auto scsv = transfer::serialize_spearman_csv(transfer::spearman_full_rankings(m));
  REQUIRE_THAT(scsv, ContainsSubstring("t1,,"));
}
