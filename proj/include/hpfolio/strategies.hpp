#pragma once

// Per-task anytime tuning traces: best-so-far raw score after each iteration
// for portfolio replay, random search (closed-form expectation and Monte
// Carlo), and a grid-restricted k-NN surrogate optimizer with expected
// improvement.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hpfolio/corpus.hpp"
#include "hpfolio/error.hpp"
#include "hpfolio/portfolio.hpp"
#include "hpfolio/rng.hpp"

namespace hpfolio::strategies {

enum class Kind { portfolio, random_exact, random_mc, surrogate };

inline std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::portfolio: return "portfolio";
    case Kind::random_exact: return "random_exact";
    case Kind::random_mc: return "random_mc";
    case Kind::surrogate: return "surrogate";
  }
  fail("strategies: bad Kind");
}

inline Kind kind_from_name(std::string_view s) {
  if (s == "portfolio") return Kind::portfolio;
  if (s == "random_exact") return Kind::random_exact;
  if (s == "random_mc") return Kind::random_mc;
  if (s == "surrogate") return Kind::surrogate;
  fail("strategies: unknown strategy kind '" + std::string(s) + "'");
}

struct StrategyTrace {
  std::string task_id;
  Kind kind = Kind::portfolio;
  std::size_t iterations = 0;
  std::vector<double> best_so_far;  // raw metric, monotone non-decreasing
  std::vector<std::string> chosen;  // empty, or one config id per iteration
  std::optional<std::vector<std::pair<double, double>>> bands;
};

namespace detail {

inline std::span<const double> observed_row(const corpus::EvalMatrix& m, std::size_t task,
                                            std::string_view who) {
  if (!m.row_fully_observed(task))
    fail(std::string(who) + ": missing cell in row for task '" + m.task(task).task_id + "'");
  return m.row(task);
}

/// Empirical quantile (inverted-CDF convention): smallest score s with
/// #(scores <= s)/n >= p.
inline double empirical_quantile(const std::vector<double>& sorted_asc, double p) {
  const std::size_t n = sorted_asc.size();
  if (p <= 0.0) return sorted_asc.front();
  const auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
  return sorted_asc[std::min(n - 1, k > 0 ? k - 1 : 0)];
}

}  // namespace detail

/// Replays a fixed portfolio against one task row: best_so_far is the running
/// maximum of the row scores at the portfolio entries.
inline StrategyTrace replay_portfolio(const portfolio::Portfolio& p, const corpus::EvalMatrix& m,
                                      std::size_t task) {
  StrategyTrace tr;
  tr.task_id = m.task(task).task_id;
  tr.kind = Kind::portfolio;
  tr.iterations = p.length();
  tr.best_so_far.reserve(p.length());
  tr.chosen = p.entries;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& id : p.entries) {
    const std::size_t c = m.require_config(id);
    if (m.missing(task, c))
      fail("strategies: missing cell (" + tr.task_id + ", " + id + ") in portfolio replay");
    best = std::max(best, m.at(task, c));
    tr.best_so_far.push_back(best);
  }
  return tr;
}

struct RandomOptions {
  bool with_replacement = false;
  double q_low = 0.05;
  double q_high = 0.95;
};

/// Closed-form random-search curve: best_so_far[t] is the exact expected
/// maximum of t+1 uniform draws from the row's score multiset. Without
/// replacement P(max <= s) = C(r(s), m)/C(n, m) with r(s) = #(scores <= s);
/// with replacement P(max <= s) = (r(s)/n)^m. Bands map Beta(m, 1) quantile
/// levels q^(1/m) through the empirical score distribution.
inline StrategyTrace random_search_exact(const corpus::EvalMatrix& m, std::size_t task,
                                         std::size_t T, const RandomOptions& opt = {}) {
  const auto row = detail::observed_row(m, task, "strategies");
  const std::size_t n = row.size();
  if (T == 0) fail("strategies: T must be positive");
  if (!opt.with_replacement && T > n)
    fail("strategies: T exceeds grid size for sampling without replacement");

  std::vector<double> sorted(row.begin(), row.end());
  std::sort(sorted.begin(), sorted.end());

  StrategyTrace tr;
  tr.task_id = m.task(task).task_id;
  tr.kind = Kind::random_exact;
  tr.iterations = T;
  tr.best_so_far.reserve(T);
  tr.bands.emplace();
  tr.bands->reserve(T);

  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t draws = t + 1;
    double expected = 0.0;
    if (opt.with_replacement) {
      double prev_cdf = 0.0;
      for (std::size_t r = 1; r <= n; ++r) {
        if (r < n && sorted[r] == sorted[r - 1]) continue;  // advance to group end
        const double cdf = std::pow(static_cast<double>(r) / static_cast<double>(n),
                                    static_cast<double>(draws));
        expected += sorted[r - 1] * (cdf - prev_cdf);
        prev_cdf = cdf;
      }
    } else {
      // Q(r) = C(r, m)/C(n, m), built incrementally: Q(m) then Q(r) =
      // Q(r-1) * r / (r - m).
      double q = 1.0;
      for (std::size_t j = 0; j < draws; ++j)
        q *= static_cast<double>(draws - j) / static_cast<double>(n - j);
      double prev_cdf = 0.0, cdf_at_r = 0.0;
      for (std::size_t r = 1; r <= n; ++r) {
        if (r < draws) {
          cdf_at_r = 0.0;
        } else if (r == draws) {
          cdf_at_r = q;
        } else {
          cdf_at_r *= static_cast<double>(r) / static_cast<double>(r - draws);
        }
        if (r < n && sorted[r] == sorted[r - 1]) continue;
        expected += sorted[r - 1] * (cdf_at_r - prev_cdf);
        prev_cdf = cdf_at_r;
      }
    }
    // Guard the monotonicity invariant against rounding.
    if (!tr.best_so_far.empty()) expected = std::max(expected, tr.best_so_far.back());
    tr.best_so_far.push_back(expected);
    const double inv = 1.0 / static_cast<double>(draws);
    tr.bands->emplace_back(detail::empirical_quantile(sorted, std::pow(opt.q_low, inv)),
                           detail::empirical_quantile(sorted, std::pow(opt.q_high, inv)));
  }
  return tr;
}

/// Monte Carlo counterpart of random_search_exact: mean best-so-far over
/// n_runs without-replacement permutations. Deterministic in the seed.
inline StrategyTrace random_search_mc(const corpus::EvalMatrix& m, std::size_t task, std::size_t T,
                                      std::size_t n_runs, std::uint64_t seed) {
  const auto row = detail::observed_row(m, task, "strategies");
  const std::size_t n = row.size();
  if (T == 0 || T > n) fail("strategies: T must be in [1, grid size]");
  if (n_runs == 0) fail("strategies: n_runs must be positive");

  std::vector<double> sum(T, 0.0);
  std::vector<std::size_t> idx(n);
  const auto stream = rng::Stream::root(seed).sub("random-search-mc");
  for (std::size_t run = 0; run < n_runs; ++run) {
    auto seq = stream.sub(run).sequence();
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < T; ++t) {  // partial Fisher-Yates: only T picks needed
      const std::size_t j = t + seq.index(n - t);
      std::swap(idx[t], idx[j]);
      best = std::max(best, row[idx[t]]);
      sum[t] += best;
    }
  }

  StrategyTrace tr;
  tr.task_id = m.task(task).task_id;
  tr.kind = Kind::random_mc;
  tr.iterations = T;
  tr.best_so_far.resize(T);
  for (std::size_t t = 0; t < T; ++t) tr.best_so_far[t] = sum[t] / static_cast<double>(n_runs);
  for (std::size_t t = 1; t < T; ++t)
    tr.best_so_far[t] = std::max(tr.best_so_far[t], tr.best_so_far[t - 1]);
  return tr;
}

struct SurrogateOptions {
  std::size_t n_init = 5;
  std::size_t k = 10;
  std::uint64_t seed = 0;
};

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

/// Distance-weighted mean/variance over the k nearest evaluated points.
struct KnnPrediction {
  double mean = 0.0;
  double sd = 0.0;
};

inline KnnPrediction knn_predict(const std::vector<double>& dist2,
                                 const std::vector<double>& values, std::size_t k) {
  const std::size_t n = dist2.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t kk = std::min(k, n);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return dist2[a] != dist2[b] ? dist2[a] < dist2[b] : a < b;
                    });
  double wsum = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < kk; ++i) {
    const double w = 1.0 / (std::sqrt(dist2[order[i]]) + 1e-12);
    wsum += w;
    mean += w * values[order[i]];
  }
  mean /= wsum;
  double var = 0.0;
  for (std::size_t i = 0; i < kk; ++i) {
    const double w = 1.0 / (std::sqrt(dist2[order[i]]) + 1e-12);
    var += w * (values[order[i]] - mean) * (values[order[i]] - mean);
  }
  var /= wsum;
  return {mean, std::sqrt(var)};
}

inline double expected_improvement(const KnnPrediction& p, double incumbent) {
  const double delta = p.mean - incumbent;
  if (p.sd <= 0.0) return std::max(0.0, delta);
  const double z = delta / p.sd;
  return delta * normal_cdf(z) + p.sd * normal_pdf(z);
}

}  // namespace detail

/// Grid-restricted surrogate optimization: n_init seeded-random distinct
/// configurations, then repeatedly evaluate the unevaluated grid point with
/// the highest expected improvement under a distance-weighted k-NN model in
/// the encoded space. k shrinks to the number of evaluated points.
inline StrategyTrace surrogate_search(const corpus::EvalMatrix& m, std::size_t task,
                                      const std::vector<std::vector<double>>& encoded_grid,
                                      std::size_t T, const SurrogateOptions& opt) {
  const auto row = detail::observed_row(m, task, "strategies");
  const std::size_t n = row.size();
  if (encoded_grid.size() != n) fail("strategies: encoded grid size does not match row");
  if (T > n) fail("strategies: T exceeds grid size");
  if (opt.n_init == 0 || opt.n_init >= T) fail("strategies: need 0 < n_init < T");
  if (opt.k == 0) fail("strategies: k must be positive");

  StrategyTrace tr;
  tr.task_id = m.task(task).task_id;
  tr.kind = Kind::surrogate;
  tr.iterations = T;

  std::vector<std::size_t> evaluated;
  std::vector<double> eval_scores;
  std::vector<bool> picked(n, false);
  double incumbent = -std::numeric_limits<double>::infinity();

  auto evaluate = [&](std::size_t c) {
    picked[c] = true;
    evaluated.push_back(c);
    eval_scores.push_back(row[c]);
    incumbent = std::max(incumbent, row[c]);
    tr.chosen.push_back(m.config_id(c));
    tr.best_so_far.push_back(incumbent);
  };

  auto seq = rng::Stream::root(opt.seed).sub("surrogate-init").sequence();
  for (std::size_t c : rng::sample_distinct(seq, n, opt.n_init)) evaluate(c);

  std::vector<double> dist2(opt.k, 0.0);
  for (std::size_t t = opt.n_init; t < T; ++t) {
    double best_ei = -1.0;
    std::size_t best_c = n;
    for (std::size_t c = 0; c < n; ++c) {
      if (picked[c]) continue;
      dist2.assign(evaluated.size(), 0.0);
      const auto& x = encoded_grid[c];
      for (std::size_t e = 0; e < evaluated.size(); ++e) {
        const auto& y = encoded_grid[evaluated[e]];
        double d = 0.0;
        for (std::size_t q = 0; q < x.size(); ++q) d += (x[q] - y[q]) * (x[q] - y[q]);
        dist2[e] = d;
      }
      const double ei =
          detail::expected_improvement(detail::knn_predict(dist2, eval_scores, opt.k), incumbent);
      if (ei > best_ei) {  // strict: ties keep the lower canonical index
        best_ei = ei;
        best_c = c;
      }
    }
    evaluate(best_c);
  }
  return tr;
}

// ---------------------------------------------------------------------------
// traces.csv

struct NamedTrace {
  std::string name;  // strategy instance label, e.g. "greedy" or "rs"
  StrategyTrace trace;
};

inline std::string serialize_traces_csv(std::span<const NamedTrace> traces) {
  std::string out = "task_id,strategy,iteration,best_so_far,band_low,band_high,chosen_config\n";
  for (const auto& [name, tr] : traces) {
    for (std::size_t t = 0; t < tr.iterations; ++t) {
      out += tr.task_id;
      out += ',';
      out += name;
      out += ',';
      out += std::to_string(t + 1);
      out += ',';
      out += io::format_double(tr.best_so_far[t]);
      out += ',';
      if (tr.bands) {
        out += io::format_double((*tr.bands)[t].first);
        out += ',';
        out += io::format_double((*tr.bands)[t].second);
      } else {
        out += ',';
      }
      out += ',';
      if (!tr.chosen.empty()) out += tr.chosen[t];
      out += '\n';
    }
  }
  return out;
}

}  // namespace hpfolio::strategies
