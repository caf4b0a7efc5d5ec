#pragma once

// Shared test fixtures: inline matrix construction and randomized instances.
// Test-side randomness uses std::mt19937, independent of the library's
// counter-based streams.

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hpfolio/corpus.hpp"

namespace testutil {

using hpfolio::corpus::EvalMatrix;
using hpfolio::corpus::Source;
using hpfolio::corpus::TaskMeta;

inline TaskMeta meta(std::string id, std::string target = "", std::string subset = "H1",
                     int n_features = 10, Source source = Source::consolidated) {
  std::string resolved_target = target.empty() ? "target_" + id : std::move(target);
  return TaskMeta{std::move(id), std::move(resolved_target), std::move(subset), n_features, source,
                  {}};
}

inline std::vector<std::string> config_ids(std::size_t n) {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t j = 0; j < n; ++j) ids.push_back("c" + std::to_string(j + 1));
  return ids;
}

/// Matrix from explicit rows; tasks t1..tN, configs c1..cM.
inline EvalMatrix make_matrix(const std::vector<std::vector<double>>& rows) {
  std::vector<TaskMeta> tasks;
  std::vector<double> scores;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    tasks.push_back(meta("t" + std::to_string(i + 1)));
    scores.insert(scores.end(), rows[i].begin(), rows[i].end());
  }
  return EvalMatrix(std::move(tasks), config_ids(rows[0].size()), std::move(scores));
}

inline std::vector<std::vector<double>> random_rows(std::mt19937& gen, std::size_t n_tasks,
                                                    std::size_t n_configs, bool with_ties = false) {
  std::uniform_real_distribution<double> u(0.5, 1.0);
  std::vector<std::vector<double>> rows(n_tasks, std::vector<double>(n_configs));
  for (auto& row : rows)
    for (auto& v : row) v = u(gen);
  if (with_ties) {
    std::uniform_int_distribution<std::size_t> pick(0, n_configs - 1);
    for (auto& row : rows)
      for (std::size_t r = 0; r < n_configs / 3; ++r) row[pick(gen)] = row[pick(gen)];
  }
  return rows;
}

/// Unique scratch directory under the build tree.
inline std::string scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hpfolio_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace testutil
