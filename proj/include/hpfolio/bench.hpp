#pragma once

// One-task-out transfer experiments: for every meta-test task, build the
// portfolio strategies on the leakage-filtered meta-train, trace all
// strategies on the held-out row, and aggregate into ADTM and average-rank
// curves.
//
// Held-out tasks are independent work units; results land in preallocated
// slots and aggregation is an ordered reduction, so reports are byte-stable
// for any worker count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "hpfolio/corpus.hpp"
#include "hpfolio/error.hpp"
#include "hpfolio/grid.hpp"
#include "hpfolio/parallel.hpp"
#include "hpfolio/portfolio.hpp"
#include "hpfolio/ranks.hpp"
#include "hpfolio/serialize.hpp"
#include "hpfolio/strategies.hpp"

namespace hpfolio::bench {

struct StrategySpec {
  std::string name;
  strategies::Kind kind = strategies::Kind::portfolio;
  // portfolio
  portfolio::Method method = portfolio::Method::greedy_asmfo;
  bool pad_to_length = true;
  bool seed_with_per_task_argmax = false;
  // random_exact
  strategies::RandomOptions random;
  // random_mc
  std::size_t n_runs = 1000;
  // surrogate
  std::size_t n_init = 5;
  std::size_t k = 10;
};

struct CorpusPaths {
  std::string evals;
  std::string tasks;
};

struct ExperimentPlan {
  CorpusPaths corpus;
  std::optional<CorpusPaths> external_corpus;  // S4-style: portfolio built once on it
  std::string grid_path;                       // required by surrogate strategies
  std::string scenario = "S1";
  corpus::LeakagePolicy leakage;
  std::vector<StrategySpec> strategies;
  std::size_t t_max = 10;
  std::uint64_t seed = 0;
};

struct TaskReport {
  std::string task_id;
  std::string meta_train_fingerprint;
  std::vector<strategies::NamedTrace> traces;  // plan strategy order
};

struct BenchReport {
  std::vector<std::string> strategy_names;          // plan order
  std::vector<std::vector<double>> adtm_curves;     // [strategy][iteration]
  std::vector<std::vector<double>> rank_curves;     // [strategy][iteration]
  std::vector<TaskReport> tasks;                    // meta-test (manifest) order
  std::vector<std::string> warnings;                // --keep-going failures
  std::string plan_fingerprint;
  std::string scenario;
  std::size_t t_max = 0;
};

// ---------------------------------------------------------------------------
// Aggregations

/// ADTM(t) = mean over tasks of (f_max - best(t)) / (f_max - f_min), from RAW
/// scores; negative when a trace exceeds the grid maximum.
inline std::vector<double> adtm(std::span<const strategies::StrategyTrace> traces,
                                std::span<const corpus::TaskStats> stats, std::size_t T) {
  if (traces.empty()) fail("bench: adtm of empty trace set");
  std::map<std::string, const corpus::TaskStats*> by_id;
  for (const auto& s : stats) by_id.emplace(s.task_id, &s);
  std::vector<double> curve(T, 0.0);
  for (const auto& tr : traces) {
    auto it = by_id.find(tr.task_id);
    if (it == by_id.end()) fail("bench: no stats for task '" + tr.task_id + "'");
    const auto& st = *it->second;
    if (st.f_max == st.f_min) fail("bench: degenerate stats for task '" + tr.task_id + "'");
    if (tr.best_so_far.size() < T)
      fail("bench: trace for task '" + tr.task_id + "' shorter than requested T");
    for (std::size_t t = 0; t < T; ++t)
      curve[t] += (st.f_max - tr.best_so_far[t]) / (st.f_max - st.f_min);
  }
  for (auto& v : curve) v /= static_cast<double>(traces.size());
  return curve;
}

/// Per-iteration fractional rank of each strategy (rank 1 = highest
/// best-so-far), averaged over tasks. traces_by_strategy[s][i] is strategy s
/// on task i; all strategies must cover the same tasks in the same order.
inline std::vector<std::vector<double>> average_rank_curve(
    const std::vector<std::vector<const strategies::StrategyTrace*>>& traces_by_strategy,
    std::size_t T) {
  const std::size_t n_strategies = traces_by_strategy.size();
  if (n_strategies == 0) fail("bench: no strategies to rank");
  const std::size_t n_tasks = traces_by_strategy[0].size();
  for (const auto& ts : traces_by_strategy) {
    if (ts.size() != n_tasks) fail("bench: mismatched task sets across strategies");
    for (std::size_t i = 0; i < n_tasks; ++i)
      if (ts[i]->task_id != traces_by_strategy[0][i]->task_id)
        fail("bench: mismatched task sets across strategies");
  }
  std::vector<std::vector<double>> curves(n_strategies, std::vector<double>(T, 0.0));
  std::vector<double> values(n_strategies);
  for (std::size_t i = 0; i < n_tasks; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t s = 0; s < n_strategies; ++s)
        values[s] = traces_by_strategy[s][i]->best_so_far.at(t);
      const auto ranks = fractional_ranks(values, /*higher_is_better=*/true);
      for (std::size_t s = 0; s < n_strategies; ++s) curves[s][t] += ranks[s];
    }
  }
  for (auto& c : curves)
    for (auto& v : c) v /= static_cast<double>(n_tasks);
  return curves;
}

// ---------------------------------------------------------------------------
// Plan I/O

inline nlohmann::json strategy_to_json(const StrategySpec& s) {
  nlohmann::json j{{"name", s.name}, {"kind", std::string(strategies::kind_name(s.kind))}};
  switch (s.kind) {
    case strategies::Kind::portfolio:
      j["method"] = std::string(portfolio::method_name(s.method));
      j["pad"] = s.pad_to_length;
      j["seed_with_per_task_argmax"] = s.seed_with_per_task_argmax;
      break;
    case strategies::Kind::random_exact:
      j["with_replacement"] = s.random.with_replacement;
      j["q_low"] = s.random.q_low;
      j["q_high"] = s.random.q_high;
      break;
    case strategies::Kind::random_mc:
      j["n_runs"] = s.n_runs;
      break;
    case strategies::Kind::surrogate:
      j["n_init"] = s.n_init;
      j["k"] = s.k;
      break;
  }
  return j;
}

inline StrategySpec strategy_from_json(const nlohmann::json& j) {
  StrategySpec s;
  try {
    s.name = j.at("name").get<std::string>();
    s.kind = strategies::kind_from_name(j.at("kind").get<std::string>());
    switch (s.kind) {
      case strategies::Kind::portfolio:
        s.method = portfolio::method_from_name(j.at("method").get<std::string>());
        if (j.contains("pad")) s.pad_to_length = j.at("pad").get<bool>();
        if (j.contains("seed_with_per_task_argmax"))
          s.seed_with_per_task_argmax = j.at("seed_with_per_task_argmax").get<bool>();
        break;
      case strategies::Kind::random_exact:
        if (j.contains("with_replacement"))
          s.random.with_replacement = j.at("with_replacement").get<bool>();
        if (j.contains("q_low")) s.random.q_low = j.at("q_low").get<double>();
        if (j.contains("q_high")) s.random.q_high = j.at("q_high").get<double>();
        break;
      case strategies::Kind::random_mc:
        if (j.contains("n_runs")) s.n_runs = j.at("n_runs").get<std::size_t>();
        break;
      case strategies::Kind::surrogate:
        if (j.contains("n_init")) s.n_init = j.at("n_init").get<std::size_t>();
        if (j.contains("k")) s.k = j.at("k").get<std::size_t>();
        break;
    }
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("bench: malformed strategy spec: ") + e.what());
  }
  return s;
}

inline nlohmann::json plan_to_json(const ExperimentPlan& p) {
  nlohmann::json j{{"corpus", {{"evals", p.corpus.evals}, {"tasks", p.corpus.tasks}}},
                   {"scenario", p.scenario},
                   {"t_max", p.t_max},
                   {"seed", p.seed}};
  if (p.external_corpus)
    j["external_corpus"] = {{"evals", p.external_corpus->evals},
                            {"tasks", p.external_corpus->tasks}};
  if (!p.grid_path.empty()) j["grid"] = p.grid_path;
  nlohmann::json leak{{"exclude_same_target", p.leakage.exclude_same_target}};
  switch (p.leakage.subset) {
    case corpus::LeakagePolicy::SubsetRule::any: leak["subset"] = "any"; break;
    case corpus::LeakagePolicy::SubsetRule::same: leak["subset"] = "same"; break;
    case corpus::LeakagePolicy::SubsetRule::disjoint: leak["subset"] = "disjoint"; break;
  }
  j["leakage"] = leak;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : p.strategies) arr.push_back(strategy_to_json(s));
  j["strategies"] = arr;
  return j;
}

inline ExperimentPlan plan_from_json(const nlohmann::json& j) {
  ExperimentPlan p;
  try {
    p.corpus.evals = j.at("corpus").at("evals").get<std::string>();
    p.corpus.tasks = j.at("corpus").at("tasks").get<std::string>();
    if (j.contains("external_corpus"))
      p.external_corpus = CorpusPaths{j.at("external_corpus").at("evals").get<std::string>(),
                                      j.at("external_corpus").at("tasks").get<std::string>()};
    if (j.contains("grid")) p.grid_path = j.at("grid").get<std::string>();
    if (j.contains("scenario")) p.scenario = j.at("scenario").get<std::string>();
    if (j.contains("t_max")) p.t_max = j.at("t_max").get<std::size_t>();
    if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("leakage")) {
      const auto& leak = j.at("leakage");
      if (leak.contains("exclude_same_target"))
        p.leakage.exclude_same_target = leak.at("exclude_same_target").get<bool>();
      if (leak.contains("subset")) {
        const auto s = leak.at("subset").get<std::string>();
        if (s == "any") p.leakage.subset = corpus::LeakagePolicy::SubsetRule::any;
        else if (s == "same") p.leakage.subset = corpus::LeakagePolicy::SubsetRule::same;
        else if (s == "disjoint") p.leakage.subset = corpus::LeakagePolicy::SubsetRule::disjoint;
        else fail("bench: unknown subset rule '" + s + "'");
      }
    }
    for (const auto& sj : j.at("strategies")) p.strategies.push_back(strategy_from_json(sj));
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("bench: malformed plan: ") + e.what());
  }
  return p;
}

inline ExperimentPlan load_plan(const std::string& path) {
  return plan_from_json(io::parse_json_file(path));
}

inline std::string plan_fingerprint(const ExperimentPlan& p) {
  return io::fingerprint_hex(io::canonical_dump(plan_to_json(p)));
}

// ---------------------------------------------------------------------------
// Orchestration

namespace detail {

inline void validate_plan(const ExperimentPlan& plan) {
  if (plan.t_max == 0) fail("bench: t_max must be >= 1");
  if (plan.strategies.empty()) fail("bench: plan needs at least one strategy");
  std::map<std::string, int> names;
  for (const auto& s : plan.strategies) {
    if (s.name.empty()) fail("bench: strategy without a name");
    if (++names[s.name] > 1) fail("bench: duplicate strategy name '" + s.name + "'");
    if (s.kind == strategies::Kind::surrogate) {
      if (plan.grid_path.empty()) fail("bench: surrogate strategy requires a grid file");
      if (s.n_init == 0 || s.n_init >= plan.t_max)
        fail("bench: surrogate needs 0 < n_init < t_max");
    }
  }
  if (plan.scenario == "S4" && !plan.external_corpus)
    fail("bench: scenario S4 requires an external corpus");
}

/// Encoded grid vectors aligned with the matrix column order.
inline std::vector<std::vector<double>> encoded_for_matrix(const grid::GridFile& g,
                                                           const corpus::EvalMatrix& m) {
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < g.configs.size(); ++i) by_id.emplace(g.configs[i].config_id, i);
  std::vector<std::vector<double>> out(m.n_configs());
  for (std::size_t j = 0; j < m.n_configs(); ++j) {
    auto it = by_id.find(m.config_id(j));
    if (it == by_id.end()) fail("bench: config '" + m.config_id(j) + "' missing from grid file");
    out[j] = grid::encode(g.configs[it->second], g.space);
  }
  return out;
}

}  // namespace detail

inline BenchReport run_one_task_out(const ExperimentPlan& plan, unsigned jobs = 1,
                                    bool keep_going = false) {
  detail::validate_plan(plan);

  const corpus::EvalMatrix raw = corpus::load_matrix(plan.corpus.evals, plan.corpus.tasks);
  if (plan.t_max > raw.n_configs()) fail("bench: t_max exceeds grid size");
  const corpus::EvalMatrix norm = corpus::normalize(raw);

  const bool external_mode = plan.external_corpus.has_value();
  std::optional<corpus::EvalMatrix> external_norm;
  if (external_mode) {
    const auto ext_raw =
        corpus::load_matrix(plan.external_corpus->evals, plan.external_corpus->tasks);
    // Both corpora must cover the same configuration grid.
    if (ext_raw.n_configs() != raw.n_configs())
      fail("bench: external corpus grid differs from meta-test grid");
    for (std::size_t j = 0; j < raw.n_configs(); ++j) ext_raw.require_config(raw.config_id(j));
    external_norm = corpus::normalize(ext_raw);
  }

  const bool needs_grid = std::any_of(plan.strategies.begin(), plan.strategies.end(),
                                      [](const StrategySpec& s) {
                                        return s.kind == strategies::Kind::surrogate;
                                      });
  std::vector<std::vector<double>> encoded;
  if (needs_grid) encoded = detail::encoded_for_matrix(grid::read_grid_json(plan.grid_path), raw);

  // External mode: portfolios do not depend on the held-out task, build once.
  std::map<std::string, portfolio::Portfolio> external_portfolios;
  if (external_mode) {
    for (const auto& s : plan.strategies) {
      if (s.kind != strategies::Kind::portfolio) continue;
      if (s.method == portfolio::Method::greedy_asmfo) {
        portfolio::GreedyOptions opt{plan.t_max, s.pad_to_length, s.seed_with_per_task_argmax};
        external_portfolios.emplace(s.name, portfolio::build_greedy(*external_norm, opt).portfolio);
      } else {
        external_portfolios.emplace(s.name,
                                    portfolio::build_average_rank(*external_norm, plan.t_max));
      }
    }
  }

  const auto bench_stream = rng::Stream::root(plan.seed).sub("bench");
  const std::size_t n_tasks = raw.n_tasks();
  std::vector<std::optional<TaskReport>> slots(n_tasks);
  std::vector<std::string> failures(n_tasks);

  parallel_for(n_tasks, jobs, [&](std::size_t i) {
    const std::string& task_id = raw.task(i).task_id;
    try {
      TaskReport rep;
      rep.task_id = task_id;

      std::map<std::string, portfolio::Portfolio> portfolios;
      if (external_mode) {
        portfolios = external_portfolios;
        rep.meta_train_fingerprint = external_norm->fingerprint();
      } else {
        const auto meta_train = corpus::filter_meta_train(norm, task_id, plan.leakage);
        rep.meta_train_fingerprint = meta_train.fingerprint();
        for (const auto& s : plan.strategies) {
          if (s.kind != strategies::Kind::portfolio) continue;
          if (s.method == portfolio::Method::greedy_asmfo) {
            portfolio::GreedyOptions opt{plan.t_max, s.pad_to_length, s.seed_with_per_task_argmax};
            portfolios.emplace(s.name, portfolio::build_greedy(meta_train, opt).portfolio);
          } else {
            portfolios.emplace(s.name, portfolio::build_average_rank(meta_train, plan.t_max));
          }
        }
      }

      for (const auto& s : plan.strategies) {
        strategies::StrategyTrace tr;
        switch (s.kind) {
          case strategies::Kind::portfolio:
            tr = strategies::replay_portfolio(portfolios.at(s.name), raw, i);
            break;
          case strategies::Kind::random_exact:
            tr = strategies::random_search_exact(raw, i, plan.t_max, s.random);
            break;
          case strategies::Kind::random_mc:
            tr = strategies::random_search_mc(raw, i, plan.t_max, s.n_runs,
                                              bench_stream.sub(s.name).sub(task_id).key());
            break;
          case strategies::Kind::surrogate: {
            strategies::SurrogateOptions opt{s.n_init, s.k,
                                             bench_stream.sub(s.name).sub(task_id).key()};
            tr = strategies::surrogate_search(raw, i, encoded, plan.t_max, opt);
            break;
          }
        }
        rep.traces.push_back({s.name, std::move(tr)});
      }
      slots[i] = std::move(rep);
    } catch (const std::exception& e) {
      if (!keep_going) throw Error("held-out task '" + task_id + "': " + e.what());
      failures[i] = std::string(e.what());
    }
  });

  BenchReport report;
  report.scenario = plan.scenario;
  report.t_max = plan.t_max;
  report.plan_fingerprint = plan_fingerprint(plan);
  for (const auto& s : plan.strategies) report.strategy_names.push_back(s.name);

  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < n_tasks; ++i) {
    if (slots[i]) {
      ok.push_back(i);
      report.tasks.push_back(std::move(*slots[i]));
    } else {
      report.warnings.push_back("held-out task '" + raw.task(i).task_id + "': " + failures[i]);
    }
  }
  if (report.tasks.empty()) fail("bench: every held-out task failed");

  const std::size_t n_strategies = plan.strategies.size();
  std::vector<std::vector<const strategies::StrategyTrace*>> by_strategy(n_strategies);
  std::vector<corpus::TaskStats> stats;
  for (std::size_t idx = 0; idx < report.tasks.size(); ++idx) {
    stats.push_back(raw.stats(ok[idx]));
    for (std::size_t s = 0; s < n_strategies; ++s)
      by_strategy[s].push_back(&report.tasks[idx].traces[s].trace);
  }
  for (std::size_t s = 0; s < n_strategies; ++s) {
    std::vector<strategies::StrategyTrace> traces;
    traces.reserve(by_strategy[s].size());
    for (const auto* tr : by_strategy[s]) traces.push_back(*tr);
    report.adtm_curves.push_back(adtm(traces, stats, plan.t_max));
  }
  report.rank_curves = average_rank_curve(by_strategy, plan.t_max);
  return report;
}

// ---------------------------------------------------------------------------
// Report output

inline nlohmann::json report_to_json(const BenchReport& r) {
  nlohmann::json adtm_obj = nlohmann::json::object();
  nlohmann::json rank_obj = nlohmann::json::object();
  for (std::size_t s = 0; s < r.strategy_names.size(); ++s) {
    adtm_obj[r.strategy_names[s]] = r.adtm_curves[s];
    rank_obj[r.strategy_names[s]] = r.rank_curves[s];
  }
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& t : r.tasks) {
    nlohmann::json traces = nlohmann::json::object();
    for (const auto& [name, tr] : t.traces) {
      nlohmann::json tj{{"kind", std::string(strategies::kind_name(tr.kind))},
                        {"best_so_far", tr.best_so_far}};
      if (!tr.chosen.empty()) tj["chosen"] = tr.chosen;
      if (tr.bands) {
        nlohmann::json bands = nlohmann::json::array();
        for (const auto& [lo, hi] : *tr.bands) bands.push_back({{"low", lo}, {"high", hi}});
        tj["bands"] = bands;
      }
      traces[name] = tj;
    }
    tasks.push_back({{"task_id", t.task_id},
                     {"meta_train_fingerprint", t.meta_train_fingerprint},
                     {"traces", traces}});
  }
  return nlohmann::json{{"adtm", adtm_obj},
                        {"avg_rank", rank_obj},
                        {"plan_fingerprint", r.plan_fingerprint},
                        {"scenario", r.scenario},
                        {"strategies", r.strategy_names},
                        {"t_max", r.t_max},
                        {"tasks", tasks},
                        {"warnings", r.warnings}};
}

inline std::string serialize_curves_csv(const BenchReport& r) {
  std::string out = "strategy,iteration,adtm,avg_rank\n";
  for (std::size_t s = 0; s < r.strategy_names.size(); ++s)
    for (std::size_t t = 0; t < r.t_max; ++t) {
      out += r.strategy_names[s];
      out += ',';
      out += std::to_string(t + 1);
      out += ',';
      out += io::format_double(r.adtm_curves[s][t]);
      out += ',';
      out += io::format_double(r.rank_curves[s][t]);
      out += '\n';
    }
  return out;
}

inline std::vector<strategies::NamedTrace> all_traces(const BenchReport& r) {
  std::vector<strategies::NamedTrace> out;
  for (const auto& t : r.tasks)
    for (const auto& nt : t.traces) out.push_back(nt);
  return out;
}

}  // namespace hpfolio::bench
