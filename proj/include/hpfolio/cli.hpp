#pragma once

// Command-line entry point wiring all modules. Logs go to stderr, data goes
// to files under --out; stdout is reserved for --print single-object queries.
// Exit codes: 0 success, 1 domain error, 2 usage error.
//
// Outputs are written only after the computation succeeds, so a failing run
// leaves no partial files.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hpfolio/bench.hpp"
#include "hpfolio/corpus.hpp"
#include "hpfolio/error.hpp"
#include "hpfolio/grid.hpp"
#include "hpfolio/parallel.hpp"
#include "hpfolio/portfolio.hpp"
#include "hpfolio/serialize.hpp"
#include "hpfolio/strategies.hpp"
#include "hpfolio/svg.hpp"
#include "hpfolio/synth.hpp"
#include "hpfolio/transfer.hpp"

namespace hpfolio::cli {

namespace detail {

inline void log_config(const std::string& command, const nlohmann::json& resolved) {
  std::cerr << "[hpfolio] " << command << " " << resolved.dump() << "\n";
}

inline std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace detail

/// Parses argv (without the program name) and runs the selected subcommand.
inline int dispatch(std::vector<std::string> args) {
  CLI::App app{"hyperparameter portfolio construction and transfer benchmarking"};
  app.require_subcommand(1);

  std::function<int()> action;

  // ---- corpus ----
  auto* corpus_cmd = app.add_subcommand("corpus", "validate or normalize evaluation corpora");
  corpus_cmd->require_subcommand(1);
  {
    struct Opts {
      std::string evals, tasks;
      bool print = false;
    };
    auto a = std::make_shared<Opts>();
    auto* validate = corpus_cmd->add_subcommand("validate", "load a corpus and report statistics");
    validate->add_option("--evals", a->evals, "evals.csv path")->required();
    validate->add_option("--tasks", a->tasks, "tasks.json path")->required();
    validate->add_flag("--print", a->print, "print the summary object to stdout");
    validate->callback([a, &action] {
      action = [a]() -> int {
        detail::log_config("corpus validate", {{"evals", a->evals}, {"tasks", a->tasks}});
        const auto m = corpus::load_matrix(a->evals, a->tasks);
        const auto degenerate = m.degenerate_rows();
        nlohmann::json summary{{"tasks", m.n_tasks()},
                               {"configs", m.n_configs()},
                               {"missing_cells", m.missing_count()},
                               {"degenerate_rows", degenerate},
                               {"fingerprint", m.fingerprint()}};
        if (a->print) std::cout << io::canonical_dump(summary);
        std::cerr << "[hpfolio] corpus ok: " << m.n_tasks() << " tasks x " << m.n_configs()
                  << " configs, " << m.missing_count() << " missing cells\n";
        if (!degenerate.empty()) {
          std::cerr << "[hpfolio] degenerate rows (cannot be normalized):";
          for (const auto& id : degenerate) std::cerr << " " << id;
          std::cerr << "\n";
          return 1;
        }
        return 0;
      };
    });
  }
  {
    struct Opts {
      std::string evals, tasks, out = ".";
    };
    auto a = std::make_shared<Opts>();
    auto* norm = corpus_cmd->add_subcommand("normalize", "write the per-row [0,1]-scaled corpus");
    norm->add_option("--evals", a->evals, "evals.csv path")->required();
    norm->add_option("--tasks", a->tasks, "tasks.json path")->required();
    norm->add_option("--out", a->out, "output directory");
    norm->callback([a, &action] {
      action = [a]() -> int {
        detail::log_config("corpus normalize",
                           {{"evals", a->evals}, {"tasks", a->tasks}, {"out", a->out}});
        const auto m = corpus::normalize(corpus::load_matrix(a->evals, a->tasks));
        io::write_file(detail::join_path(a->out, "evals.csv"), corpus::serialize_evals_csv(m));
        io::write_file(detail::join_path(a->out, "tasks.json"),
                       corpus::serialize_tasks_json(m.tasks()));
        return 0;
      };
    });
  }

  // ---- grid ----
  auto* grid_cmd = app.add_subcommand("grid", "sample reproducible hyperparameter grids");
  grid_cmd->require_subcommand(1);
  {
    struct Opts {
      std::uint64_t seed = 0;
      std::size_t size = 1000;
      std::string out = "grid.json";
    };
    auto a = std::make_shared<Opts>();
    auto* sample = grid_cmd->add_subcommand("sample", "sample the default space into grid.json");
    sample->add_option("--seed", a->seed, "sampling seed");
    sample->add_option("--size", a->size, "number of configurations");
    sample->add_option("--out", a->out, "output file");
    sample->callback([a, &action] {
      action = [a]() -> int {
        detail::log_config("grid sample", {{"seed", a->seed}, {"size", a->size}, {"out", a->out}});
        const auto space = grid::default_space(a->seed, a->size);
        grid::write_grid_json(a->out, space, grid::sample_grid(space));
        return 0;
      };
    });
  }

  // ---- portfolio ----
  auto* pf_cmd = app.add_subcommand("portfolio", "build hyperparameter portfolios");
  pf_cmd->require_subcommand(1);
  {
    struct Opts {
      std::string method = "greedy", evals, tasks, out = "portfolio.json";
      std::size_t len = 10;
      bool no_pad = false, seed_argmax = false, print = false;
    };
    auto a = std::make_shared<Opts>();
    auto* build = pf_cmd->add_subcommand("build", "build a portfolio from a meta-train corpus");
    build->add_option("--method", a->method, "greedy | average_rank");
    build->add_option("--meta-train", a->evals, "meta-train evals.csv")->required();
    build->add_option("--tasks", a->tasks, "meta-train tasks.json")->required();
    build->add_option("--len", a->len, "portfolio length");
    build->add_flag("--no-pad", a->no_pad, "stop at zero objective instead of padding");
    build->add_flag("--seed-per-task-argmax", a->seed_argmax,
                    "greedy: pick the per-task best configurations first");
    build->add_option("--out", a->out, "output file");
    build->add_flag("--print", a->print, "print the portfolio object to stdout");
    build->callback([a, &action] {
      action = [a]() -> int {
        detail::log_config("portfolio build", {{"method", a->method},
                                               {"meta_train", a->evals},
                                               {"tasks", a->tasks},
                                               {"len", a->len},
                                               {"pad", !a->no_pad},
                                               {"seed_with_per_task_argmax", a->seed_argmax},
                                               {"out", a->out}});
        const auto meta_train = corpus::normalize(corpus::load_matrix(a->evals, a->tasks));
        const auto method = portfolio::method_from_name(a->method);
        portfolio::Portfolio p;
        nlohmann::json build_params{{"max_len", a->len}};
        if (method == portfolio::Method::greedy_asmfo) {
          portfolio::GreedyOptions opt{a->len, !a->no_pad, a->seed_argmax};
          p = portfolio::build_greedy(meta_train, opt).portfolio;
          build_params["pad"] = !a->no_pad;
          build_params["seed_with_per_task_argmax"] = a->seed_argmax;
        } else {
          p = portfolio::build_average_rank(meta_train, a->len);
        }
        const auto j = portfolio::portfolio_to_json(p, build_params);
        io::write_file(a->out, io::canonical_dump(j));
        if (a->print) std::cout << io::canonical_dump(j);
        return 0;
      };
    });
  }

  // ---- bench ----
  auto* bench_cmd = app.add_subcommand("bench", "run transfer benchmarks");
  bench_cmd->require_subcommand(1);
  {
    struct Opts {
      std::string plan, out = ".";
      bool keep_going = false, no_svg = false;
      unsigned jobs = 0;
      std::int64_t t_max = -1, seed = -1;
    };
    auto a = std::make_shared<Opts>();
    auto* run = bench_cmd->add_subcommand("run", "one-task-out benchmark from a plan file");
    run->add_option("--plan", a->plan, "plan.json path")->required();
    run->add_option("--out", a->out, "output directory");
    run->add_flag("--keep-going", a->keep_going, "downgrade per-task errors to warnings");
    run->add_option("--jobs", a->jobs, "worker count (default: available parallelism)");
    run->add_option("--t-max", a->t_max, "override the plan's iteration budget");
    run->add_option("--seed", a->seed, "override the plan's seed");
    run->add_flag("--no-svg", a->no_svg, "skip the curves.svg plot");
    run->callback([a, &action] {
      action = [a]() -> int {
        auto plan = bench::load_plan(a->plan);
        if (a->t_max >= 0) plan.t_max = static_cast<std::size_t>(a->t_max);
        if (a->seed >= 0) plan.seed = static_cast<std::uint64_t>(a->seed);
        const unsigned jobs = a->jobs == 0 ? default_jobs() : a->jobs;
        detail::log_config("bench run", {{"plan", a->plan},
                                         {"out", a->out},
                                         {"jobs", jobs},
                                         {"keep_going", a->keep_going},
                                         {"resolved_plan", bench::plan_to_json(plan)}});
        const auto report = bench::run_one_task_out(plan, jobs, a->keep_going);
        for (const auto& w : report.warnings) std::cerr << "[hpfolio] warning: " << w << "\n";
        io::write_file(detail::join_path(a->out, "report.json"),
                       io::canonical_dump(bench::report_to_json(report)));
        io::write_file(detail::join_path(a->out, "curves.csv"),
                       bench::serialize_curves_csv(report));
        const auto traces = bench::all_traces(report);
        io::write_file(detail::join_path(a->out, "traces.csv"),
                       strategies::serialize_traces_csv(traces));
        if (!a->no_svg)
          io::write_file(detail::join_path(a->out, "curves.svg"), svg::render_curves_svg(report));
        return 0;
      };
    });
  }

  // ---- analyze ----
  auto* an_cmd = app.add_subcommand("analyze", "pairwise transferability analyses");
  an_cmd->require_subcommand(1);
  {
    struct Opts {
      std::string evals, tasks, out = ".", by = "n_features,subset_id";
      std::size_t k = 10;
      unsigned jobs = 0;
      bool print = false;
    };

    auto add_common = [](CLI::App* cmd, const std::shared_ptr<Opts>& a) {
      cmd->add_option("--evals", a->evals, "evals.csv path")->required();
      cmd->add_option("--tasks", a->tasks, "tasks.json path")->required();
      cmd->add_option("--out", a->out, "output directory");
      cmd->add_option("--jobs", a->jobs, "worker count");
      cmd->add_flag("--print", a->print, "print the summary object to stdout");
    };

    {
      auto a = std::make_shared<Opts>();
      auto* overlap = an_cmd->add_subcommand("overlap", "top-k overlap matrix between tasks");
      overlap->add_option("--k", a->k, "top-k size");
      add_common(overlap, a);
      overlap->callback([a, &action] {
        action = [a]() -> int {
          const unsigned jobs = a->jobs == 0 ? default_jobs() : a->jobs;
          detail::log_config("analyze overlap", {{"evals", a->evals},
                                                 {"tasks", a->tasks},
                                                 {"k", a->k},
                                                 {"out", a->out}});
          const auto m = corpus::load_matrix(a->evals, a->tasks);
          const auto o = transfer::topk_overlap(m, a->k, jobs);
          io::write_file(detail::join_path(a->out, "overlap.csv"),
                         transfer::serialize_overlap_csv(o));
          nlohmann::json hist = nlohmann::json::object();
          for (const auto& [count, freq] : o.histogram) hist[std::to_string(count)] = freq;
          if (a->print)
            std::cout << io::canonical_dump(
                {{"k", o.k}, {"mean", o.mean}, {"sd", o.sd}, {"histogram", hist}});
          std::cerr << "[hpfolio] top-" << o.k << " overlap: mean " << o.mean << " sd " << o.sd
                    << "\n";
          return 0;
        };
      });
    }
    {
      auto a = std::make_shared<Opts>();
      auto* spearman = an_cmd->add_subcommand("spearman", "pairwise rank correlations");
      add_common(spearman, a);
      spearman->callback([a, &action] {
        action = [a]() -> int {
          const unsigned jobs = a->jobs == 0 ? default_jobs() : a->jobs;
          detail::log_config("analyze spearman",
                             {{"evals", a->evals}, {"tasks", a->tasks}, {"out", a->out}});
          const auto m = corpus::load_matrix(a->evals, a->tasks);
          const auto s = transfer::spearman_full_rankings(m, jobs);
          io::write_file(detail::join_path(a->out, "spearman.csv"),
                         transfer::serialize_spearman_csv(s));
          if (a->print) std::cout << io::canonical_dump({{"mean", s.mean}, {"sd", s.sd}});
          std::cerr << "[hpfolio] spearman: mean " << s.mean << " sd " << s.sd << "\n";
          return 0;
        };
      });
    }
    {
      auto a = std::make_shared<Opts>();
      auto* grouped = an_cmd->add_subcommand("grouped", "grouped mean overlap");
      grouped->add_option("--k", a->k, "top-k size");
      grouped->add_option("--by", a->by, "comma-separated metadata keys");
      add_common(grouped, a);
      grouped->callback([a, &action] {
        action = [a]() -> int {
          const unsigned jobs = a->jobs == 0 ? default_jobs() : a->jobs;
          detail::log_config("analyze grouped", {{"evals", a->evals},
                                                 {"tasks", a->tasks},
                                                 {"k", a->k},
                                                 {"by", a->by},
                                                 {"out", a->out}});
          const auto m = corpus::load_matrix(a->evals, a->tasks);
          const auto g = transfer::grouped_overlap(m, detail::split_csv_list(a->by), a->k,
                                                   /*separate_external=*/true, jobs);
          io::write_file(detail::join_path(a->out, "grouped_overlap.csv"),
                         transfer::serialize_grouped_csv(g));
          if (a->print) {
            nlohmann::json cells = nlohmann::json::object();
            for (std::size_t i = 0; i < g.group_labels.size(); ++i)
              for (std::size_t j = 0; j < g.group_labels.size(); ++j)
                if (!std::isnan(g.at(i, j)))
                  cells[g.group_labels[i] + "/" + g.group_labels[j]] = g.at(i, j);
            std::cout << io::canonical_dump({{"k", g.k}, {"mean_overlap", cells}});
          }
          return 0;
        };
      });
    }
  }

  // ---- synth ----
  auto* synth_cmd = app.add_subcommand("synth", "generate synthetic corpora");
  synth_cmd->require_subcommand(1);
  {
    struct Opts {
      synth::SynthSpec spec;
      std::string subsets = "H1,H2", tiers = "172", out = ".";
    };
    auto a = std::make_shared<Opts>();
    auto* gen = synth_cmd->add_subcommand("generate", "write a synthetic corpus + grid");
    gen->add_option("--tasks", a->spec.n_tasks, "number of tasks");
    gen->add_option("--configs", a->spec.n_configs, "number of configurations");
    gen->add_option("--similarity", a->spec.similarity, "shared-surface weight in [0,1]");
    gen->add_option("--noise", a->spec.noise_sd, "noise standard deviation");
    gen->add_option("--seed", a->spec.seed, "generation seed");
    gen->add_option("--targets", a->spec.n_targets, "number of distinct targets");
    gen->add_option("--subsets", a->subsets, "comma-separated subset ids");
    gen->add_option("--tiers", a->tiers, "comma-separated n_features tiers");
    gen->add_option("--out", a->out, "output directory");
    gen->callback([a, &action] {
      action = [a]() -> int {
        a->spec.subsets = detail::split_csv_list(a->subsets);
        a->spec.feature_tiers.clear();
        for (const auto& t : detail::split_csv_list(a->tiers))
          a->spec.feature_tiers.push_back(std::stoi(t));
        detail::log_config("synth generate", {{"tasks", a->spec.n_tasks},
                                              {"configs", a->spec.n_configs},
                                              {"similarity", a->spec.similarity},
                                              {"noise", a->spec.noise_sd},
                                              {"seed", a->spec.seed},
                                              {"out", a->out}});
        const auto c = synth::generate(a->spec);
        io::write_file(detail::join_path(a->out, "evals.csv"),
                       corpus::serialize_evals_csv(c.matrix));
        io::write_file(detail::join_path(a->out, "tasks.json"),
                       corpus::serialize_tasks_json(c.matrix.tasks()));
        grid::write_grid_json(detail::join_path(a->out, "grid.json"), c.space, c.configs);
        return 0;
      };
    });
  }

  std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return action ? action() : 2;
  } catch (const std::exception& e) {
    std::cerr << "[hpfolio] error: " << e.what() << "\n";
    return 1;
  }
}

inline int dispatch(int argc, char** argv) {
  std::vector<std::string> args;
  args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(std::move(args));
}

}  // namespace hpfolio::cli
