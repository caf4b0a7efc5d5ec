#pragma once

// Evaluation corpora: dense task x configuration score tables plus task
// metadata. Owns the evals.csv / tasks.json formats, per-row score scaling to
// [0, 1], and meta-train filtering for one-task-out protocols.
//
// Matrices are immutable after construction and safe to share across workers.
// Row order follows the task manifest; column order follows first appearance
// in the score file. All downstream tie-breaks refer to these canonical
// orders.

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hpfolio/error.hpp"
#include "hpfolio/serialize.hpp"

namespace hpfolio::corpus {

enum class Source { consolidated, external };

inline std::string_view source_name(Source s) {
  return s == Source::consolidated ? "consolidated" : "external";
}

inline Source source_from_name(std::string_view name) {
  if (name == "consolidated") return Source::consolidated;
  if (name == "external") return Source::external;
  fail("corpus: unknown source '" + std::string(name) + "'");
}

struct TaskMeta {
  std::string task_id;
  std::string target;
  std::string subset_id;
  int n_features = 1;
  Source source = Source::consolidated;
  std::map<std::string, std::string> extra_tags;
};

/// Raw-metric row statistics, kept through normalization so distances to the
/// row maximum can be computed for scores outside the grid.
struct TaskStats {
  std::string task_id;
  double f_min = 0.0;
  double f_max = 0.0;
  std::string argmax_config;
};

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct LeakagePolicy {
  enum class SubsetRule { any, same, disjoint };
  bool exclude_same_target = false;
  SubsetRule subset = SubsetRule::any;
};

class EvalMatrix {
 public:
  /// Validates dimensions and metadata and computes per-row raw statistics.
  /// Missing cells are NaN; every row needs at least one observed score.
  EvalMatrix(std::vector<TaskMeta> tasks, std::vector<std::string> configs,
             std::vector<double> scores)
      : tasks_(std::move(tasks)), configs_(std::move(configs)), scores_(std::move(scores)) {
    if (tasks_.empty()) fail("corpus: empty task manifest");
    if (configs_.empty()) fail("corpus: no configurations");
    if (scores_.size() != tasks_.size() * configs_.size())
      fail("corpus: score table dimensions do not match tasks x configs");
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
      const auto& t = tasks_[i];
      if (t.task_id.empty()) fail("corpus: empty task_id");
      if (t.n_features < 1) fail("corpus: n_features must be >= 1 for task '" + t.task_id + "'");
      if (!task_index_.emplace(t.task_id, i).second)
        fail("corpus: duplicate task_id '" + t.task_id + "'");
    }
    for (std::size_t j = 0; j < configs_.size(); ++j) {
      if (configs_[j].empty()) fail("corpus: empty config_id");
      if (!config_index_.emplace(configs_[j], j).second)
        fail("corpus: duplicate config_id '" + configs_[j] + "'");
    }
    for (double s : scores_)
      if (std::isinf(s)) fail("corpus: non-finite score");
    compute_stats();
  }

  std::size_t n_tasks() const { return tasks_.size(); }
  std::size_t n_configs() const { return configs_.size(); }
  const std::vector<TaskMeta>& tasks() const { return tasks_; }
  const std::vector<std::string>& configs() const { return configs_; }
  const TaskMeta& task(std::size_t i) const { return tasks_[i]; }
  const std::string& config_id(std::size_t j) const { return configs_[j]; }

  double at(std::size_t t, std::size_t c) const { return scores_[t * configs_.size() + c]; }
  bool missing(std::size_t t, std::size_t c) const { return std::isnan(at(t, c)); }
  std::span<const double> row(std::size_t t) const {
    return {scores_.data() + t * configs_.size(), configs_.size()};
  }

  const TaskStats& stats(std::size_t i) const { return stats_[i]; }
  const std::vector<TaskStats>& all_stats() const { return stats_; }
  bool normalized() const { return normalized_; }

  std::optional<std::size_t> find_task(std::string_view id) const {
    auto it = task_index_.find(std::string(id));
    return it == task_index_.end() ? std::nullopt : std::optional<std::size_t>(it->second);
  }
  std::optional<std::size_t> find_config(std::string_view id) const {
    auto it = config_index_.find(std::string(id));
    return it == config_index_.end() ? std::nullopt : std::optional<std::size_t>(it->second);
  }
  std::size_t require_task(std::string_view id) const {
    auto i = find_task(id);
    if (!i) fail("corpus: unknown task '" + std::string(id) + "'");
    return *i;
  }
  std::size_t require_config(std::string_view id) const {
    auto j = find_config(id);
    if (!j) fail("corpus: unknown config '" + std::string(id) + "'");
    return *j;
  }

  bool row_fully_observed(std::size_t t) const {
    for (std::size_t c = 0; c < n_configs(); ++c)
      if (missing(t, c)) return false;
    return true;
  }
  bool any_missing() const {
    for (double s : scores_)
      if (std::isnan(s)) return true;
    return false;
  }
  std::size_t missing_count() const {
    std::size_t n = 0;
    for (double s : scores_) n += std::isnan(s) ? 1 : 0;
    return n;
  }

  /// Rows whose observed scores do not contain two distinct values; these
  /// cannot be normalized.
  std::vector<std::string> degenerate_rows() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n_tasks(); ++i)
      if (stats_[i].f_min == stats_[i].f_max) out.push_back(tasks_[i].task_id);
    return out;
  }

  std::string fingerprint() const;

 private:
  friend EvalMatrix normalize(const EvalMatrix&);
  friend EvalMatrix filter_meta_train(const EvalMatrix&, std::string_view, const LeakagePolicy&);

  // Used by normalize/filter to carry raw stats and the normalized flag.
  EvalMatrix(std::vector<TaskMeta> tasks, std::vector<std::string> configs,
             std::vector<double> scores, std::vector<TaskStats> stats, bool normalized)
      : tasks_(std::move(tasks)),
        configs_(std::move(configs)),
        scores_(std::move(scores)),
        stats_(std::move(stats)),
        normalized_(normalized) {
    for (std::size_t i = 0; i < tasks_.size(); ++i) task_index_.emplace(tasks_[i].task_id, i);
    for (std::size_t j = 0; j < configs_.size(); ++j) config_index_.emplace(configs_[j], j);
  }

  void compute_stats() {
    stats_.clear();
    stats_.reserve(tasks_.size());
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
      TaskStats st;
      st.task_id = tasks_[i].task_id;
      bool seen = false;
      for (std::size_t c = 0; c < configs_.size(); ++c) {
        const double s = at(i, c);
        if (std::isnan(s)) continue;
        if (!seen || s < st.f_min) st.f_min = s;
        if (!seen || s > st.f_max) {
          st.f_max = s;
          st.argmax_config = configs_[c];
        }
        seen = true;
      }
      if (!seen) fail("corpus: missing row for task '" + tasks_[i].task_id + "'");
      stats_.push_back(std::move(st));
    }
  }

  std::vector<TaskMeta> tasks_;
  std::vector<std::string> configs_;
  std::vector<double> scores_;  // row-major, NaN = missing
  std::vector<TaskStats> stats_;
  bool normalized_ = false;
  std::unordered_map<std::string, std::size_t> task_index_;
  std::unordered_map<std::string, std::size_t> config_index_;
};

// ---------------------------------------------------------------------------
// tasks.json

inline nlohmann::json task_to_json(const TaskMeta& t) {
  nlohmann::json tags = nlohmann::json::object();
  for (const auto& [k, v] : t.extra_tags) tags[k] = v;
  return nlohmann::json{{"task_id", t.task_id},      {"target", t.target},
                        {"subset_id", t.subset_id},  {"n_features", t.n_features},
                        {"source", std::string(source_name(t.source))}, {"extra_tags", tags}};
}

inline TaskMeta task_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail("corpus: task entry is not an object");
  TaskMeta t;
  try {
    t.task_id = j.at("task_id").get<std::string>();
    t.target = j.at("target").get<std::string>();
    t.subset_id = j.at("subset_id").get<std::string>();
    t.n_features = j.at("n_features").get<int>();
    t.source = source_from_name(j.at("source").get<std::string>());
    if (j.contains("extra_tags"))
      for (auto it = j.at("extra_tags").begin(); it != j.at("extra_tags").end(); ++it)
        t.extra_tags[it.key()] = it.value().get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("corpus: malformed task entry: ") + e.what());
  }
  return t;
}

inline std::string serialize_tasks_json(const std::vector<TaskMeta>& tasks) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : tasks) arr.push_back(task_to_json(t));
  return io::canonical_dump(arr);
}

inline std::vector<TaskMeta> parse_tasks_json(const std::string& text, const std::string& where) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_array()) fail("corpus: " + where + " is not a JSON array");
  std::vector<TaskMeta> tasks;
  tasks.reserve(j.size());
  for (const auto& e : j) tasks.push_back(task_from_json(e));
  return tasks;
}

inline std::vector<TaskMeta> load_tasks(const std::string& tasks_path) {
  return parse_tasks_json(io::read_file(tasks_path), tasks_path);
}

// ---------------------------------------------------------------------------
// evals.csv

inline constexpr std::string_view kEvalsHeader = "task_id,config_id,score";

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline double parse_score(std::string_view field, std::size_t line_no) {
  const std::string s(field);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
    fail("corpus: malformed row " + std::to_string(line_no) + " (bad score '" + s + "')");
  return v;
}

}  // namespace detail

/// Parses the cell-per-line CSV against a task manifest. Columns are ordered
/// by first appearance; rows by manifest order.
inline EvalMatrix parse_matrix_csv(const std::string& csv_text, std::vector<TaskMeta> tasks) {
  std::unordered_map<std::string, std::size_t> task_index;
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (!task_index.emplace(tasks[i].task_id, i).second)
      fail("corpus: duplicate task_id '" + tasks[i].task_id + "'");
  if (tasks.empty()) fail("corpus: empty task manifest");

  std::vector<std::string> configs;
  std::unordered_map<std::string, std::size_t> config_index;
  // (task, config) -> score, sparse until dimensions are known
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  std::vector<double> cell_scores;
  std::unordered_set<std::uint64_t> seen;

  std::size_t pos = 0, line_no = 0;
  bool saw_header = false;
  while (pos <= csv_text.size()) {
    std::size_t nl = csv_text.find('\n', pos);
    if (nl == std::string::npos) nl = csv_text.size();
    std::string_view line(csv_text.data() + pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (pos > csv_text.size()) break;
      continue;
    }
    if (!saw_header) {
      if (line != kEvalsHeader)
        fail("corpus: malformed header (expected '" + std::string(kEvalsHeader) + "')");
      saw_header = true;
      continue;
    }
    const auto fields = detail::split_fields(line);
    if (fields.size() != 3) fail("corpus: malformed row " + std::to_string(line_no));
    const std::string task_id(fields[0]);
    const std::string config_id(fields[1]);
    auto ti = task_index.find(task_id);
    if (ti == task_index.end()) fail("corpus: unknown task '" + task_id + "' in score file");
    auto cj = config_index.find(config_id);
    std::size_t col;
    if (cj == config_index.end()) {
      col = configs.size();
      configs.push_back(config_id);
      config_index.emplace(config_id, col);
    } else {
      col = cj->second;
    }
    const std::uint64_t cell_key =
        static_cast<std::uint64_t>(ti->second) << 32 | static_cast<std::uint64_t>(col);
    if (!seen.insert(cell_key).second)
      fail("corpus: duplicate cell (" + task_id + ", " + config_id + ")");
    cells.emplace_back(ti->second, col);
    cell_scores.push_back(detail::parse_score(fields[2], line_no));
  }
  if (!saw_header) fail("corpus: empty score file");
  if (configs.empty()) fail("corpus: score file has no data rows");

  std::vector<double> scores(tasks.size() * configs.size(), kMissing);
  for (std::size_t i = 0; i < cells.size(); ++i)
    scores[cells[i].first * configs.size() + cells[i].second] = cell_scores[i];

  // EvalMatrix's stats pass reports any task left without a single cell.
  return EvalMatrix(std::move(tasks), std::move(configs), std::move(scores));
}

inline EvalMatrix load_matrix(const std::string& evals_path, const std::string& tasks_path) {
  return parse_matrix_csv(io::read_file(evals_path), load_tasks(tasks_path));
}

inline std::string serialize_evals_csv(const EvalMatrix& m) {
  std::string out(kEvalsHeader);
  out += "\n";
  for (std::size_t i = 0; i < m.n_tasks(); ++i)
    for (std::size_t j = 0; j < m.n_configs(); ++j) {
      if (m.missing(i, j)) continue;
      out += m.task(i).task_id;
      out += ',';
      out += m.config_id(j);
      out += ',';
      out += io::format_double(m.at(i, j));
      out += '\n';
    }
  return out;
}

inline std::string EvalMatrix::fingerprint() const {
  return io::fingerprint_hex(serialize_evals_csv(*this) + serialize_tasks_json(tasks_));
}

// ---------------------------------------------------------------------------
// Operations

/// Per-row min-max scaling of the observed scores to [0, 1]. Raw f_min/f_max
/// are carried through unchanged, so applying this to an already-normalized
/// matrix is the identity.
inline EvalMatrix normalize(const EvalMatrix& m) {
  std::vector<double> scores(m.n_tasks() * m.n_configs(), kMissing);
  for (std::size_t i = 0; i < m.n_tasks(); ++i) {
    double lo = 0.0, hi = 0.0;
    bool seen = false;
    for (std::size_t j = 0; j < m.n_configs(); ++j) {
      const double s = m.at(i, j);
      if (std::isnan(s)) continue;
      if (!seen || s < lo) lo = s;
      if (!seen || s > hi) hi = s;
      seen = true;
    }
    if (lo == hi)
      fail("corpus: degenerate row for task '" + m.task(i).task_id + "' (f_min == f_max)");
    for (std::size_t j = 0; j < m.n_configs(); ++j) {
      const double s = m.at(i, j);
      if (std::isnan(s)) continue;
      scores[i * m.n_configs() + j] = (s - lo) / (hi - lo);
    }
  }
  return EvalMatrix(m.tasks(), m.configs(), std::move(scores), m.all_stats(), true);
}

/// Meta-train rows for a held-out task: the task itself is always removed;
/// the policy optionally removes same-target tasks and restricts to the same
/// or the disjoint observation subset. Columns are unchanged.
inline EvalMatrix filter_meta_train(const EvalMatrix& m, std::string_view held_out,
                                    const LeakagePolicy& policy) {
  const std::size_t held = m.require_task(held_out);
  const TaskMeta& h = m.task(held);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < m.n_tasks(); ++i) {
    if (i == held) continue;
    const TaskMeta& t = m.task(i);
    if (policy.exclude_same_target && t.target == h.target) continue;
    if (policy.subset == LeakagePolicy::SubsetRule::same && t.subset_id != h.subset_id) continue;
    if (policy.subset == LeakagePolicy::SubsetRule::disjoint && t.subset_id == h.subset_id)
      continue;
    keep.push_back(i);
  }
  if (keep.empty())
    fail("corpus: empty meta-train after filtering (held-out '" + std::string(held_out) + "')");
  std::vector<TaskMeta> tasks;
  std::vector<TaskStats> stats;
  std::vector<double> scores;
  tasks.reserve(keep.size());
  stats.reserve(keep.size());
  scores.reserve(keep.size() * m.n_configs());
  for (std::size_t i : keep) {
    tasks.push_back(m.task(i));
    stats.push_back(m.stats(i));
    const auto r = m.row(i);
    scores.insert(scores.end(), r.begin(), r.end());
  }
  return EvalMatrix(std::move(tasks), m.configs(), std::move(scores), std::move(stats),
                    m.normalized());
}

}  // namespace hpfolio::corpus
