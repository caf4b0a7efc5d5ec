#pragma once

// Hyperparameter search spaces: per-parameter sampling distributions with
// conditional activation, reproducible fixed-grid sampling, and numeric
// encoding of configurations for the surrogate strategy.
//
// Sampling uses one counter-based substream per parameter, so extending a
// space never perturbs the other columns. Inactive parameters keep their
// sampled values; activation is an interpretation flag.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "hpfolio/error.hpp"
#include "hpfolio/rng.hpp"
#include "hpfolio/serialize.hpp"

namespace hpfolio::grid {

enum class ParamKind { int_uniform, float_uniform, float_log2_uniform, categorical };

inline std::string_view kind_name(ParamKind k) {
  switch (k) {
    case ParamKind::int_uniform: return "int_uniform";
    case ParamKind::float_uniform: return "float_uniform";
    case ParamKind::float_log2_uniform: return "float_log2_uniform";
    case ParamKind::categorical: return "categorical";
  }
  fail("grid: bad ParamKind");
}

inline ParamKind kind_from_name(std::string_view s) {
  if (s == "int_uniform") return ParamKind::int_uniform;
  if (s == "float_uniform") return ParamKind::float_uniform;
  if (s == "float_log2_uniform") return ParamKind::float_log2_uniform;
  if (s == "categorical") return ParamKind::categorical;
  fail("grid: unknown param kind '" + std::string(s) + "'");
}

/// Parameter is active only when another (categorical) parameter holds the
/// given value.
struct ActiveWhen {
  std::string param;
  std::string value;
  bool operator==(const ActiveWhen&) const = default;
};

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::float_uniform;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<std::string> choices;  // categorical only
  std::optional<ActiveWhen> active_when;
};

struct HyperparamSpace {
  std::vector<ParamSpec> params;
  std::uint64_t seed = 0;
  std::size_t size = 0;

  void validate() const {
    std::unordered_map<std::string, const ParamSpec*> by_name;
    for (const auto& p : params) {
      if (p.name.empty()) fail("grid: empty parameter name");
      if (!by_name.emplace(p.name, &p).second)
        fail("grid: duplicate parameter name '" + p.name + "'");
      if (p.kind == ParamKind::categorical) {
        if (p.choices.empty()) fail("grid: categorical '" + p.name + "' has no choices");
      } else {
        if (!(p.lower < p.upper)) fail("grid: bounds must satisfy lower < upper for '" + p.name + "'");
        if (p.kind == ParamKind::float_log2_uniform && !(p.lower > 0))
          fail("grid: log2 parameter '" + p.name + "' needs lower > 0");
      }
    }
    for (const auto& p : params) {
      if (!p.active_when) continue;
      auto it = by_name.find(p.active_when->param);
      if (it == by_name.end())
        fail("grid: '" + p.name + "' conditioned on unknown parameter '" + p.active_when->param + "'");
      const ParamSpec& gate = *it->second;
      if (gate.kind != ParamKind::categorical || gate.active_when)
        fail("grid: '" + p.name + "' must be conditioned on an unconditional categorical parameter");
      if (std::find(gate.choices.begin(), gate.choices.end(), p.active_when->value) ==
          gate.choices.end())
        fail("grid: '" + p.name + "' conditioned on impossible value '" + p.active_when->value + "'");
    }
  }
};

/// One sampled grid point. `values` is aligned with the space's parameter
/// order; categorical parameters store the choice string, others the number.
struct Configuration {
  std::string config_id;
  std::vector<double> numeric;       // NaN for categorical slots
  std::vector<std::string> choice;   // empty for numeric slots
  std::vector<bool> active;

  double number(std::size_t p) const { return numeric[p]; }
  const std::string& category(std::size_t p) const { return choice[p]; }
};

/// The 8-parameter XGBoost space: five of the parameters only apply to the
/// tree booster.
inline HyperparamSpace default_space(std::uint64_t seed = 0, std::size_t size = 1000) {
  const ActiveWhen tree_only{"booster", "gbtree"};
  HyperparamSpace s;
  s.seed = seed;
  s.size = size;
  s.params = {
      {"n_estimators", ParamKind::int_uniform, 1, 1000, {}, std::nullopt},
      {"learning_rate", ParamKind::float_log2_uniform, 0.031, 1, {}, std::nullopt},
      {"booster", ParamKind::categorical, 0, 0, {"gblinear", "gbtree"}, std::nullopt},
      {"subsample", ParamKind::float_uniform, 0.5, 1, {}, tree_only},
      {"max_depth", ParamKind::int_uniform, 6, 15, {}, tree_only},
      {"min_child_weight", ParamKind::float_log2_uniform, 1, 8, {}, tree_only},
      {"colsample_bytree", ParamKind::float_uniform, 0.2, 1, {}, tree_only},
      {"colsample_bylevel", ParamKind::float_uniform, 0.2, 1, {}, tree_only},
  };
  return s;
}

namespace detail {

inline std::string padded_index(std::size_t i, std::size_t size) {
  std::size_t width = 1, max_index = size > 0 ? size - 1 : 0;
  while (max_index >= 10) {
    max_index /= 10;
    ++width;
  }
  std::string s = std::to_string(i);
  return std::string(width - std::min(width, s.size()), '0') + s;
}

inline double sample_numeric(const ParamSpec& p, double u) {
  switch (p.kind) {
    case ParamKind::int_uniform: {
      const double v = p.lower + std::floor(u * (p.upper - p.lower + 1.0));
      return std::min(v, p.upper);
    }
    case ParamKind::float_uniform:
      return p.lower + u * (p.upper - p.lower);
    case ParamKind::float_log2_uniform: {
      const double llo = std::log2(p.lower), lhi = std::log2(p.upper);
      return std::exp2(llo + u * (lhi - llo));
    }
    default:
      fail("grid: sample_numeric on categorical");
  }
}

}  // namespace detail

/// Samples `space.size` configurations, each parameter independently from its
/// distribution. Pure function of (space, seed); config ids are the
/// zero-padded sample index.
inline std::vector<Configuration> sample_grid(const HyperparamSpace& space) {
  space.validate();
  if (space.size == 0) fail("grid: size must be positive");
  const std::size_t n = space.size, np = space.params.size();

  std::vector<Configuration> configs(n);
  for (std::size_t i = 0; i < n; ++i) {
    configs[i].config_id = detail::padded_index(i, n);
    configs[i].numeric.assign(np, std::numeric_limits<double>::quiet_NaN());
    configs[i].choice.assign(np, "");
    configs[i].active.assign(np, true);
  }
  const auto root = rng::Stream::root(space.seed).sub("param");
  for (std::size_t p = 0; p < np; ++p) {
    const ParamSpec& spec = space.params[p];
    const auto stream = root.sub(spec.name);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = stream.unit(i);
      if (spec.kind == ParamKind::categorical)
        configs[i].choice[p] = spec.choices[std::min(
            static_cast<std::size_t>(u * static_cast<double>(spec.choices.size())),
            spec.choices.size() - 1)];
      else
        configs[i].numeric[p] = detail::sample_numeric(spec, u);
    }
  }
  // Activation flags from the sampled gate values.
  std::unordered_map<std::string, std::size_t> pidx;
  for (std::size_t p = 0; p < np; ++p) pidx.emplace(space.params[p].name, p);
  for (std::size_t p = 0; p < np; ++p) {
    const auto& aw = space.params[p].active_when;
    if (!aw) continue;
    const std::size_t gate = pidx.at(aw->param);
    for (std::size_t i = 0; i < n; ++i) configs[i].active[p] = configs[i].choice[gate] == aw->value;
  }
  return configs;
}

/// Conditional groups: distinct active_when predicates in first-appearance
/// order. Each contributes one activity bit to the encoding.
inline std::vector<ActiveWhen> conditional_groups(const HyperparamSpace& space) {
  std::vector<ActiveWhen> groups;
  for (const auto& p : space.params)
    if (p.active_when && std::find(groups.begin(), groups.end(), *p.active_when) == groups.end())
      groups.push_back(*p.active_when);
  return groups;
}

inline std::size_t encoded_dim(const HyperparamSpace& space) {
  std::size_t d = 0;
  for (const auto& p : space.params)
    d += p.kind == ParamKind::categorical ? p.choices.size() : 1;
  return d + conditional_groups(space).size();
}

/// Fixed-length numeric embedding: numeric parameters min-max scaled to [0,1]
/// (in log2 space for log2 distributions), categoricals one-hot, plus one
/// activity bit per conditional group. Inactive parameters keep their scaled
/// sampled value.
inline std::vector<double> encode(const Configuration& c, const HyperparamSpace& space) {
  const std::size_t np = space.params.size();
  if (c.numeric.size() != np || c.choice.size() != np || c.active.size() != np)
    fail("grid: config/space mismatch");
  std::vector<double> x;
  x.reserve(encoded_dim(space));
  for (std::size_t p = 0; p < np; ++p) {
    const ParamSpec& spec = space.params[p];
    if (spec.kind == ParamKind::categorical) {
      const auto it = std::find(spec.choices.begin(), spec.choices.end(), c.choice[p]);
      if (it == spec.choices.end())
        fail("grid: config/space mismatch (bad choice for '" + spec.name + "')");
      for (std::size_t k = 0; k < spec.choices.size(); ++k)
        x.push_back(k == static_cast<std::size_t>(it - spec.choices.begin()) ? 1.0 : 0.0);
      continue;
    }
    const double v = c.numeric[p];
    if (std::isnan(v) || v < spec.lower || v > spec.upper)
      fail("grid: config/space mismatch (value out of bounds for '" + spec.name + "')");
    if (spec.kind == ParamKind::float_log2_uniform)
      x.push_back((std::log2(v) - std::log2(spec.lower)) /
                  (std::log2(spec.upper) - std::log2(spec.lower)));
    else
      x.push_back((v - spec.lower) / (spec.upper - spec.lower));
  }
  std::unordered_map<std::string, std::size_t> pidx;
  for (std::size_t p = 0; p < np; ++p) pidx.emplace(space.params[p].name, p);
  for (const auto& g : conditional_groups(space))
    x.push_back(c.choice[pidx.at(g.param)] == g.value ? 1.0 : 0.0);
  return x;
}

inline std::vector<std::vector<double>> encode_grid(const std::vector<Configuration>& configs,
                                                    const HyperparamSpace& space) {
  std::vector<std::vector<double>> out;
  out.reserve(configs.size());
  for (const auto& c : configs) out.push_back(encode(c, space));
  return out;
}

// ---------------------------------------------------------------------------
// grid.json

inline nlohmann::json param_to_json(const ParamSpec& p) {
  nlohmann::json j{{"name", p.name}, {"kind", std::string(kind_name(p.kind))}};
  if (p.kind == ParamKind::categorical) {
    j["choices"] = p.choices;
  } else {
    j["lower"] = p.lower;
    j["upper"] = p.upper;
  }
  if (p.active_when)
    j["active_when"] = {{"param", p.active_when->param}, {"value", p.active_when->value}};
  return j;
}

inline ParamSpec param_from_json(const nlohmann::json& j) {
  ParamSpec p;
  try {
    p.name = j.at("name").get<std::string>();
    p.kind = kind_from_name(j.at("kind").get<std::string>());
    if (p.kind == ParamKind::categorical) {
      p.choices = j.at("choices").get<std::vector<std::string>>();
    } else {
      p.lower = j.at("lower").get<double>();
      p.upper = j.at("upper").get<double>();
    }
    if (j.contains("active_when"))
      p.active_when = ActiveWhen{j.at("active_when").at("param").get<std::string>(),
                                 j.at("active_when").at("value").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("grid: malformed parameter spec: ") + e.what());
  }
  return p;
}

inline nlohmann::json grid_to_json(const HyperparamSpace& space,
                                   const std::vector<Configuration>& configs) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : space.params) params.push_back(param_to_json(p));
  nlohmann::json cfgs = nlohmann::json::array();
  for (const auto& c : configs) {
    nlohmann::json values = nlohmann::json::object();
    nlohmann::json flags = nlohmann::json::object();
    for (std::size_t p = 0; p < space.params.size(); ++p) {
      const ParamSpec& spec = space.params[p];
      if (spec.kind == ParamKind::categorical)
        values[spec.name] = c.choice[p];
      else if (spec.kind == ParamKind::int_uniform)
        values[spec.name] = static_cast<std::int64_t>(c.numeric[p]);
      else
        values[spec.name] = c.numeric[p];
      flags[spec.name] = static_cast<bool>(c.active[p]);
    }
    cfgs.push_back({{"config_id", c.config_id}, {"values", values}, {"active_flags", flags}});
  }
  return nlohmann::json{{"generator", rng::kGeneratorId},
                        {"seed", space.seed},
                        {"size", space.size},
                        {"params", params},
                        {"configs", cfgs}};
}

struct GridFile {
  HyperparamSpace space;
  std::vector<Configuration> configs;
};

inline GridFile grid_from_json(const nlohmann::json& j) {
  GridFile g;
  try {
    g.space.seed = j.at("seed").get<std::uint64_t>();
    g.space.size = j.at("size").get<std::size_t>();
    for (const auto& pj : j.at("params")) g.space.params.push_back(param_from_json(pj));
    g.space.validate();
    for (const auto& cj : j.at("configs")) {
      Configuration c;
      c.config_id = cj.at("config_id").get<std::string>();
      const auto& values = cj.at("values");
      const auto& flags = cj.at("active_flags");
      for (const auto& p : g.space.params) {
        if (p.kind == ParamKind::categorical) {
          c.numeric.push_back(std::numeric_limits<double>::quiet_NaN());
          c.choice.push_back(values.at(p.name).get<std::string>());
        } else {
          c.numeric.push_back(values.at(p.name).get<double>());
          c.choice.emplace_back();
        }
        c.active.push_back(flags.at(p.name).get<bool>());
      }
      g.configs.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("grid: malformed grid file: ") + e.what());
  }
  return g;
}

inline void write_grid_json(const std::string& path, const HyperparamSpace& space,
                            const std::vector<Configuration>& configs) {
  io::write_file(path, io::canonical_dump(grid_to_json(space, configs)));
}

inline GridFile read_grid_json(const std::string& path) {
  return grid_from_json(io::parse_json_file(path));
}

}  // namespace hpfolio::grid
