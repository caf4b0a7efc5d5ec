#pragma once

// Ordered configuration portfolios built from a normalized meta-train matrix.
//
// Two model-free builders:
//  - greedy: each step appends the configuration that minimizes the
//    meta-train mean distance to the per-task maximum, given everything
//    already in the portfolio;
//  - average rank: configurations ordered by mean per-task fractional rank.
//
// All ties break toward the lower canonical column index, so both builders
// are deterministic and independent of task order and parallel scheduling.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"

#include "hpfolio/corpus.hpp"
#include "hpfolio/error.hpp"
#include "hpfolio/ranks.hpp"
#include "hpfolio/serialize.hpp"

namespace hpfolio::portfolio {

enum class Method { greedy_asmfo, average_rank };

inline std::string_view method_name(Method m) {
  return m == Method::greedy_asmfo ? "greedy_asmfo" : "average_rank";
}

inline Method method_from_name(std::string_view s) {
  if (s == "greedy_asmfo" || s == "greedy") return Method::greedy_asmfo;
  if (s == "average_rank" || s == "ar") return Method::average_rank;
  fail("portfolio: unknown method '" + std::string(s) + "'");
}

struct Portfolio {
  std::vector<std::string> entries;  // distinct config ids, in play order
  Method method = Method::greedy_asmfo;
  std::string meta_train_fingerprint;

  std::size_t length() const { return entries.size(); }
};

struct GreedyOptions {
  std::size_t max_len = 0;
  /// Keep appending (in average-rank order) after the greedy objective hits
  /// zero, so the portfolio always has max_len entries.
  bool pad_to_length = false;
  /// Restrict the first picks to the per-task argmax configurations before
  /// opening the scan to the whole grid.
  bool seed_with_per_task_argmax = false;
};

struct BuildResult {
  Portfolio portfolio;
  /// Meta-train objective (mean distance to per-task max) after each greedy
  /// step; shorter than the portfolio when padding kicked in.
  std::vector<double> objective;
};

namespace detail {

inline void require_buildable(const corpus::EvalMatrix& m, std::size_t max_len) {
  if (!m.normalized()) fail("portfolio: meta-train must be normalized");
  if (m.any_missing()) fail("portfolio: missing cell in meta-train");
  if (max_len == 0) fail("portfolio: max_len must be positive");
  if (max_len > m.n_configs()) fail("portfolio: max_len exceeds grid size");
}

/// Mean per-config fractional rank across tasks (rank 1 = best score).
inline std::vector<double> mean_ranks(const corpus::EvalMatrix& m) {
  std::vector<double> mean(m.n_configs(), 0.0);
  for (std::size_t i = 0; i < m.n_tasks(); ++i) {
    const auto ranks = fractional_ranks(m.row(i), /*higher_is_better=*/true);
    for (std::size_t j = 0; j < m.n_configs(); ++j) mean[j] += ranks[j];
  }
  for (auto& v : mean) v /= static_cast<double>(m.n_tasks());
  return mean;
}

/// Column order by ascending key, ties by lower column index.
inline std::vector<std::size_t> order_by(const std::vector<double>& key) {
  std::vector<std::size_t> order(key.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  return order;
}

}  // namespace detail

/// Greedy sequential construction: step t adds the configuration c minimizing
///   (1/N) sum_i min(dist_i, 1 - score_i(c))
/// where dist_i is task i's distance to its maximum under the portfolio so
/// far. Stops early once the objective reaches zero (optionally padding in
/// average-rank order).
inline BuildResult build_greedy(const corpus::EvalMatrix& meta_train, const GreedyOptions& opt) {
  detail::require_buildable(meta_train, opt.max_len);
  const std::size_t n_tasks = meta_train.n_tasks();
  const std::size_t n_configs = meta_train.n_configs();

  std::vector<double> dist(n_tasks, 1.0);
  std::vector<bool> chosen(n_configs, false);
  std::vector<bool> in_seed_pool(n_configs, false);
  std::size_t seed_remaining = 0;
  if (opt.seed_with_per_task_argmax) {
    for (std::size_t i = 0; i < n_tasks; ++i) {
      const auto row = meta_train.row(i);
      std::size_t best = 0;
      for (std::size_t j = 1; j < n_configs; ++j)
        if (row[j] > row[best]) best = j;
      if (!in_seed_pool[best]) {
        in_seed_pool[best] = true;
        ++seed_remaining;
      }
    }
  }

  BuildResult result;
  result.portfolio.method = Method::greedy_asmfo;
  result.portfolio.meta_train_fingerprint = meta_train.fingerprint();

  while (result.portfolio.entries.size() < opt.max_len) {
    const bool seed_phase = seed_remaining > 0;
    double best_obj = std::numeric_limits<double>::infinity();
    std::size_t best_c = n_configs;
    for (std::size_t c = 0; c < n_configs; ++c) {
      if (chosen[c]) continue;
      if (seed_phase && !in_seed_pool[c]) continue;
      double sum = 0.0;
      for (std::size_t i = 0; i < n_tasks; ++i)
        sum += std::min(dist[i], 1.0 - meta_train.at(i, c));
      const double obj = sum / static_cast<double>(n_tasks);
      if (obj < best_obj) {  // strict: ties keep the lower column index
        best_obj = obj;
        best_c = c;
      }
    }
    chosen[best_c] = true;
    if (in_seed_pool[best_c]) --seed_remaining;
    for (std::size_t i = 0; i < n_tasks; ++i)
      dist[i] = std::min(dist[i], 1.0 - meta_train.at(i, best_c));
    result.portfolio.entries.push_back(meta_train.config_id(best_c));
    result.objective.push_back(best_obj);
    if (best_obj == 0.0) break;
  }

  if (opt.pad_to_length && result.portfolio.entries.size() < opt.max_len) {
    const auto order = detail::order_by(detail::mean_ranks(meta_train));
    for (std::size_t j : order) {
      if (result.portfolio.entries.size() == opt.max_len) break;
      if (!chosen[j]) {
        chosen[j] = true;
        result.portfolio.entries.push_back(meta_train.config_id(j));
      }
    }
  }
  return result;
}

/// Portfolio ordered by ascending mean fractional rank across meta-train
/// tasks.
inline Portfolio build_average_rank(const corpus::EvalMatrix& meta_train, std::size_t max_len) {
  detail::require_buildable(meta_train, max_len);
  const auto order = detail::order_by(detail::mean_ranks(meta_train));
  Portfolio p;
  p.method = Method::average_rank;
  p.meta_train_fingerprint = meta_train.fingerprint();
  p.entries.reserve(max_len);
  for (std::size_t k = 0; k < max_len; ++k) p.entries.push_back(meta_train.config_id(order[k]));
  return p;
}

// ---------------------------------------------------------------------------
// portfolio.json

inline nlohmann::json portfolio_to_json(const Portfolio& p,
                                        nlohmann::json build_params = nlohmann::json::object()) {
  return nlohmann::json{{"method", std::string(method_name(p.method))},
                        {"meta_train_fingerprint", p.meta_train_fingerprint},
                        {"entries", p.entries},
                        {"build_params", std::move(build_params)}};
}

inline Portfolio portfolio_from_json(const nlohmann::json& j) {
  Portfolio p;
  try {
    p.method = method_from_name(j.at("method").get<std::string>());
    p.meta_train_fingerprint = j.at("meta_train_fingerprint").get<std::string>();
    p.entries = j.at("entries").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("portfolio: malformed portfolio file: ") + e.what());
  }
  return p;
}

inline void write_portfolio_json(const std::string& path, const Portfolio& p,
                                 nlohmann::json build_params = nlohmann::json::object()) {
  io::write_file(path, io::canonical_dump(portfolio_to_json(p, std::move(build_params))));
}

inline Portfolio read_portfolio_json(const std::string& path) {
  return portfolio_from_json(io::parse_json_file(path));
}

}  // namespace hpfolio::portfolio
