#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "hpfolio/grid.hpp"
#include "hpfolio/serialize.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

using namespace hpfolio;
using grid::ParamKind;

TEST_CASE("default space matches the 8-parameter XGBoost grid", "[grid]") {
  const auto space = grid::default_space();
  REQUIRE(space.params.size() == 8);

  const auto& lr = space.params[1];
  REQUIRE(lr.name == "learning_rate");
  REQUIRE(lr.kind == ParamKind::float_log2_uniform);
  REQUIRE(lr.lower == 0.031);
  REQUIRE(lr.upper == 1.0);
  REQUIRE_FALSE(lr.active_when.has_value());

  const auto& booster = space.params[2];
  REQUIRE(booster.kind == ParamKind::categorical);
  REQUIRE(booster.choices == std::vector<std::string>{"gblinear", "gbtree"});

  // only n_estimators, learning_rate and booster stay active under gblinear
  const auto& subsample = space.params[3];
  REQUIRE(subsample.active_when.has_value());
  REQUIRE(subsample.active_when->param == "booster");
  REQUIRE(subsample.active_when->value == "gbtree");
  for (std::size_t p = 3; p < 8; ++p) REQUIRE(space.params[p].active_when.has_value());
  for (std::size_t p = 0; p < 3; ++p) REQUIRE_FALSE(space.params[p].active_when.has_value());
}

TEST_CASE("sampled grid respects every bound", "[grid]") {
  const auto space = grid::default_space(42, 1000);
  const auto configs = grid::sample_grid(space);
  REQUIRE(configs.size() == 1000);
  for (const auto& c : configs) {
    for (std::size_t p = 0; p < space.params.size(); ++p) {
      const auto& spec = space.params[p];
      if (spec.kind == ParamKind::categorical) {
        REQUIRE((c.choice[p] == "gblinear" || c.choice[p] == "gbtree"));
        continue;
      }
      REQUIRE(c.numeric[p] >= spec.lower);
      REQUIRE(c.numeric[p] <= spec.upper);
      if (spec.kind == ParamKind::int_uniform)
        REQUIRE(c.numeric[p] == std::floor(c.numeric[p]));
    }
    // activation flags follow the sampled booster
    const bool tree = c.choice[2] == "gbtree";
    for (std::size_t p = 3; p < 8; ++p) REQUIRE(c.active[p] == tree);
    for (std::size_t p = 0; p < 3; ++p) REQUIRE(c.active[p]);
  }
}

TEST_CASE("log2-distributed parameters are uniform in log2 space", "[grid]") {
  const auto space = grid::default_space(42, 1000);
  const auto configs = grid::sample_grid(space);
  // min_child_weight ~ 2^U with U uniform on [0, 3]
  std::vector<double> logs;
  for (const auto& c : configs) logs.push_back(std::log2(c.numeric[5]));
  for (double v : logs) {
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 3.0);
  }
  const double d = oracle::ks_statistic(logs, [](double x) { return x / 3.0; });
  REQUIRE(d < oracle::ks_critical_001(logs.size()));
}

TEST_CASE("sampling is a pure function of the seed", "[grid]") {
  const auto a = grid::sample_grid(grid::default_space(7, 50));
  const auto b = grid::sample_grid(grid::default_space(7, 50));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].config_id == b[i].config_id);
    for (std::size_t p = 0; p < 8; ++p) {
      if (std::isnan(a[i].numeric[p]))
        REQUIRE(a[i].choice[p] == b[i].choice[p]);
      else
        REQUIRE(a[i].numeric[p] == b[i].numeric[p]);
    }
  }
  const auto c = grid::sample_grid(grid::default_space(8, 50));
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size() && !any_diff; ++i)
    any_diff = a[i].numeric[0] != c[i].numeric[0];
  REQUIRE(any_diff);
}

TEST_CASE("config ids are zero-padded sample indices", "[grid]") {
  const auto configs = grid::sample_grid(grid::default_space(1, 1000));
  REQUIRE(configs.front().config_id == "000");
  REQUIRE(configs[42].config_id == "042");
  REQUIRE(configs.back().config_id == "999");
}

TEST_CASE("adding a parameter does not perturb existing columns", "[grid]") {
  auto space = grid::default_space(13, 100);
  const auto before = grid::sample_grid(space);
  space.params.push_back({"gamma", ParamKind::float_uniform, 0.0, 10.0, {}, std::nullopt});
  const auto after = grid::sample_grid(space);
  for (std::size_t i = 0; i < before.size(); ++i)
    for (std::size_t p = 0; p < 8; ++p) {
      if (space.params[p].kind == ParamKind::categorical)
        REQUIRE(before[i].choice[p] == after[i].choice[p]);
      else
        REQUIRE(before[i].numeric[p] == after[i].numeric[p]);
    }
}

TEST_CASE("int_uniform attains both inclusive bounds", "[grid]") {
  grid::HyperparamSpace space;
  space.seed = 3;
  space.size = 400;
  space.params = {{"v", ParamKind::int_uniform, 1, 3, {}, std::nullopt}};
  std::set<double> seen;
  for (const auto& c : grid::sample_grid(space)) seen.insert(c.numeric[0]);
  REQUIRE(seen == std::set<double>{1.0, 2.0, 3.0});
}

TEST_CASE("encode maps bounds to the unit interval", "[grid]") {
  const auto space = grid::default_space(0, 4);
  REQUIRE(grid::encoded_dim(space) == 10);  // 7 numeric + 2 one-hot + 1 activity bit

  grid::Configuration c;
  c.config_id = "x";
  c.numeric = {1, 0.031, std::nan(""), 0.5, 6, 1, 0.2, 0.2};
  c.choice = {"", "", "gblinear", "", "", "", "", ""};
  c.active = {true, true, true, false, false, false, false, false};
  auto x = grid::encode(c, space);
  REQUIRE(x.size() == 10);
  REQUIRE(x[0] == 0.0);                    // n_estimators at lower bound
  REQUIRE(x[1] == 0.0);                    // learning_rate at lower bound (log2 scale)
  REQUIRE(x[2] == 1.0);                    // booster one-hot: gblinear
  REQUIRE(x[3] == 0.0);
  REQUIRE(x.back() == 0.0);                // activity bit for the gbtree group

  c.numeric[0] = 1000;
  c.numeric[1] = 1.0;
  c.choice[2] = "gbtree";
  for (std::size_t p = 3; p < 8; ++p) c.active[p] = true;
  x = grid::encode(c, space);
  REQUIRE(x[0] == 1.0);
  REQUIRE(x[1] == 1.0);
  REQUIRE(x[2] == 0.0);
  REQUIRE(x[3] == 1.0);
  REQUIRE(x.back() == 1.0);
}

TEST_CASE("encode is injective on sampled grids", "[grid]") {
  const auto space = grid::default_space(21, 200);
  const auto configs = grid::sample_grid(space);
  const auto encoded = grid::encode_grid(configs, space);
  std::set<std::vector<double>> unique(encoded.begin(), encoded.end());
  REQUIRE(unique.size() == encoded.size());
}

TEST_CASE("grid.json round-trips", "[grid]") {
  const auto space = grid::default_space(5, 20);
  const auto configs = grid::sample_grid(space);
  const auto j = grid::grid_to_json(space, configs);
  const auto text = io::canonical_dump(j);
  const auto back = grid::grid_from_json(nlohmann::json::parse(text));
  REQUIRE(back.configs.size() == configs.size());
  REQUIRE(back.space.params.size() == 8);
  REQUIRE(io::canonical_dump(grid::grid_to_json(back.space, back.configs)) == text);
  // encodings survive the round trip exactly except int parameters, which are
  // serialized as integers by design
  const auto e1 = grid::encode_grid(configs, space);
  const auto e2 = grid::encode_grid(back.configs, back.space);
  for (std::size_t i = 0; i < e1.size(); ++i)
    for (std::size_t q = 0; q < e1[i].size(); ++q)
      REQUIRE_THAT(e2[i][q], Catch::Matchers::WithinAbs(e1[i][q], 1e-12));
}

TEST_CASE("sample_grid rejects invalid spaces", "[grid]") {
  auto space = grid::default_space(0, 0);
  REQUIRE_THROWS_AS(grid::sample_grid(space), Error);
  space = grid::default_space(0, 10);
  space.params[0].lower = 5;
  space.params[0].upper = 5;
  REQUIRE_THROWS_AS(grid::sample_grid(space), Error);
  space = grid::default_space(0, 10);
  space.params.push_back(space.params[0]);  // duplicate name
  REQUIRE_THROWS_AS(grid::sample_grid(space), Error);
}
