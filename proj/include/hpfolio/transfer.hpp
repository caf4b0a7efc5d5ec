#pragma once

// Pairwise hyperparameter transferability: top-k overlap of best
// configurations, tie-corrected Spearman correlation of full rankings, and
// grouped aggregation of the overlap matrix.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "hpfolio/corpus.hpp"
#include "hpfolio/error.hpp"
#include "hpfolio/parallel.hpp"
#include "hpfolio/ranks.hpp"
#include "hpfolio/serialize.hpp"

namespace hpfolio::transfer {

struct OverlapMatrix {
  std::vector<std::string> task_ids;
  std::size_t k = 0;
  std::vector<int> counts;  // n*n, symmetric; diagonal is -1 (not considered)
  std::map<int, std::size_t> histogram;  // over unordered off-diagonal pairs
  double mean = 0.0;
  double sd = 0.0;

  int at(std::size_t i, std::size_t j) const { return counts[i * task_ids.size() + j]; }
};

/// Indices of the k best scores, ties at the boundary resolved by lower
/// canonical column index. Returned sorted for set intersection.
inline std::vector<std::size_t> topk_set(std::span<const double> row, std::size_t k) {
  std::vector<std::size_t> order(row.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return row[a] != row[b] ? row[a] > row[b] : a < b;
                    });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

namespace detail {

inline void require_full_rows(const corpus::EvalMatrix& m, std::string_view who) {
  for (std::size_t i = 0; i < m.n_tasks(); ++i)
    if (!m.row_fully_observed(i))
      fail(std::string(who) + ": missing cell in row for task '" + m.task(i).task_id + "'");
}

inline std::size_t intersection_size(const std::vector<std::size_t>& a,
                                     const std::vector<std::size_t>& b) {
  std::size_t i = 0, j = 0, n = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++n;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return n;
}

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

/// Sample standard deviation; zero for fewer than two values.
inline MeanSd mean_sd(std::span<const double> v) {
  MeanSd out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() < 2) return out;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return out;
}

}  // namespace detail

inline OverlapMatrix topk_overlap(const corpus::EvalMatrix& m, std::size_t k, unsigned jobs = 1) {
  if (k == 0 || k > m.n_configs()) fail("transfer: k out of range [1, n_configs]");
  detail::require_full_rows(m, "transfer");
  const std::size_t n = m.n_tasks();

  std::vector<std::vector<std::size_t>> sets(n);
  parallel_for(n, jobs, [&](std::size_t i) { sets[i] = topk_set(m.row(i), k); });

  OverlapMatrix out;
  out.k = k;
  out.task_ids.reserve(n);
  for (const auto& t : m.tasks()) out.task_ids.push_back(t.task_id);
  out.counts.assign(n * n, -1);
  parallel_for(n, jobs, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const int c = static_cast<int>(detail::intersection_size(sets[i], sets[j]));
      out.counts[i * n + j] = c;
      out.counts[j * n + i] = c;
    }
  });

  std::vector<double> values;
  values.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      ++out.histogram[out.at(i, j)];
      values.push_back(out.at(i, j));
    }
  const auto ms = detail::mean_sd(values);
  out.mean = ms.mean;
  out.sd = ms.sd;
  return out;
}

/// Tie-corrected Spearman: Pearson correlation of fractional rank vectors.
inline double spearman_rho(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail("transfer: length mismatch");
  const auto ra = fractional_ranks(a, /*higher_is_better=*/false);
  const auto rb = fractional_ranks(b, /*higher_is_better=*/false);
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += ra[i];
    sb += rb[i];
    sab += ra[i] * rb[i];
    saa += ra[i] * ra[i];
    sbb += rb[i] * rb[i];
  }
  const double da = n * saa - sa * sa;
  const double db = n * sbb - sb * sb;
  if (da == 0.0 || db == 0.0) fail("transfer: constant row, Spearman undefined");
  return std::clamp((n * sab - sa * sb) / std::sqrt(da * db), -1.0, 1.0);
}

struct SpearmanTable {
  std::vector<std::string> task_ids;
  std::vector<double> rho;  // n*n; diagonal NaN (not considered)
  double mean = 0.0;
  double sd = 0.0;

  double at(std::size_t i, std::size_t j) const { return rho[i * task_ids.size() + j]; }
};

inline SpearmanTable spearman_full_rankings(const corpus::EvalMatrix& m, unsigned jobs = 1) {
  detail::require_full_rows(m, "transfer");
  const std::size_t n = m.n_tasks();
  SpearmanTable out;
  out.task_ids.reserve(n);
  for (const auto& t : m.tasks()) out.task_ids.push_back(t.task_id);
  out.rho.assign(n * n, std::numeric_limits<double>::quiet_NaN());
  parallel_for(n, jobs, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = spearman_rho(m.row(i), m.row(j));
      out.rho[i * n + j] = r;
      out.rho[j * n + i] = r;
    }
  });
  std::vector<double> values;
  values.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) values.push_back(out.at(i, j));
  const auto ms = detail::mean_sd(values);
  out.mean = ms.mean;
  out.sd = ms.sd;
  return out;
}

struct GroupedOverlap {
  std::vector<std::string> group_labels;  // first-appearance order over tasks
  std::size_t k = 0;
  std::vector<double> mean;        // g*g; NaN marks cells with no valid pairs
  std::vector<std::size_t> n_pairs;

  double at(std::size_t i, std::size_t j) const { return mean[i * group_labels.size() + j]; }
};

namespace detail {

inline std::string group_key_value(const corpus::TaskMeta& t, const std::string& key) {
  if (key == "target") return t.target;
  if (key == "subset_id") return t.subset_id;
  if (key == "n_features") return std::to_string(t.n_features);
  if (key == "source") return std::string(corpus::source_name(t.source));
  auto it = t.extra_tags.find(key);
  if (it == t.extra_tags.end())
    fail("transfer: task '" + t.task_id + "' lacks group key '" + key + "'");
  return it->second;
}

}  // namespace detail

/// Mean pairwise top-k overlap per group pair. Within-group cells average the
/// unordered distinct pairs; size-one groups have no valid self-pairs and get
/// an absent (NaN) cell. External-source tasks form their own group so a
/// mixed corpus reproduces the grouped-source aggregation.
inline GroupedOverlap grouped_overlap(const corpus::EvalMatrix& m,
                                      const std::vector<std::string>& group_by, std::size_t k,
                                      bool separate_external = true, unsigned jobs = 1) {
  if (group_by.empty()) fail("transfer: empty group_by");
  const OverlapMatrix pairwise = topk_overlap(m, k, jobs);
  const std::size_t n = m.n_tasks();

  std::vector<std::string> label_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = m.task(i);
    if (separate_external && t.source == corpus::Source::external) {
      label_of[i] = "external";
      continue;
    }
    std::string label;
    for (const auto& key : group_by) {
      if (!label.empty()) label += '|';
      label += detail::group_key_value(t, key);
    }
    label_of[i] = label;
  }

  GroupedOverlap out;
  out.k = k;
  std::map<std::string, std::size_t> group_index;
  std::vector<std::size_t> group_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = group_index.find(label_of[i]);
    if (it == group_index.end()) {
      it = group_index.emplace(label_of[i], out.group_labels.size()).first;
      out.group_labels.push_back(label_of[i]);
    }
    group_of[i] = it->second;
  }

  const std::size_t g = out.group_labels.size();
  std::vector<double> sums(g * g, 0.0);
  out.n_pairs.assign(g * g, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::size_t gi = group_of[i], gj = group_of[j];
      sums[gi * g + gj] += pairwise.at(i, j);
      ++out.n_pairs[gi * g + gj];
      if (gi != gj) {  // overlap is symmetric; mirror cross-group cells
        sums[gj * g + gi] += pairwise.at(i, j);
        ++out.n_pairs[gj * g + gi];
      }
    }
  out.mean.assign(g * g, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < g * g; ++c)
    if (out.n_pairs[c] > 0) out.mean[c] = sums[c] / static_cast<double>(out.n_pairs[c]);
  return out;
}

// ---------------------------------------------------------------------------
// CSV output

namespace detail {

template <typename Cell>
std::string square_csv(const std::vector<std::string>& ids, Cell cell) {
  std::string out = "task_id";
  for (const auto& id : ids) {
    out += ',';
    out += id;
  }
  out += '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out += ids[i];
    for (std::size_t j = 0; j < ids.size(); ++j) {
      out += ',';
      out += cell(i, j);
    }
    out += '\n';
  }
  return out;
}

}  // namespace detail

inline std::string serialize_overlap_csv(const OverlapMatrix& o) {
  return detail::square_csv(o.task_ids, [&](std::size_t i, std::size_t j) {
    return i == j ? std::string() : std::to_string(o.at(i, j));
  });
}

inline std::string serialize_spearman_csv(const SpearmanTable& s) {
  return detail::square_csv(s.task_ids, [&](std::size_t i, std::size_t j) {
    return i == j ? std::string() : io::format_double(s.at(i, j));
  });
}

inline std::string serialize_grouped_csv(const GroupedOverlap& g) {
  std::string out = "group";
  for (const auto& label : g.group_labels) {
    out += ',';
    out += label;
  }
  out += '\n';
  for (std::size_t i = 0; i < g.group_labels.size(); ++i) {
    out += g.group_labels[i];
    for (std::size_t j = 0; j < g.group_labels.size(); ++j) {
      out += ',';
      if (!std::isnan(g.at(i, j))) out += io::format_double(g.at(i, j));
    }
    out += '\n';
  }
  return out;
}

}  // namespace hpfolio::transfer
