#pragma once

// Synthetic evaluation corpora with a controllable level of shared structure
// between tasks. Each task row is a convex blend of one shared latent
// response surface and a task-specific one, plus observation noise, clipped
// to an AUC-like range. Surfaces are smooth functions of the encoded grid
// coordinates so the surrogate strategy has exploitable structure.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "hpfolio/corpus.hpp"
#include "hpfolio/error.hpp"
#include "hpfolio/grid.hpp"
#include "hpfolio/rng.hpp"

namespace hpfolio::synth {

struct SynthSpec {
  std::size_t n_tasks = 24;
  std::size_t n_configs = 1000;
  double similarity = 0.9;  // 1 = one shared surface, 0 = independent surfaces
  double noise_sd = 0.01;
  std::uint64_t seed = 0;
  // Group structure: task i gets target i % n_targets, then subsets and
  // feature tiers cycle over the remaining index.
  std::size_t n_targets = 12;
  std::vector<std::string> subsets = {"H1", "H2"};
  std::vector<int> feature_tiers = {172};

  void validate() const {
    if (n_tasks < 2 || n_configs < 2) fail("synth: need n_tasks >= 2 and n_configs >= 2");
    if (!(similarity >= 0.0 && similarity <= 1.0)) fail("synth: similarity must be in [0, 1]");
    if (noise_sd < 0.0) fail("synth: noise_sd must be non-negative");
    if (n_targets == 0 || subsets.empty() || feature_tiers.empty())
      fail("synth: empty group structure");
  }
};

struct SynthCorpus {
  corpus::EvalMatrix matrix;
  grid::HyperparamSpace space;
  std::vector<grid::Configuration> configs;
};

namespace detail {

/// Smooth random surface over [0,1]^d: a short sum of low-frequency cosine
/// waves along random directions, normalized into [-1, 1].
class Surface {
 public:
  Surface(rng::Stream s, std::size_t dim) {
    auto seq = s.sequence();
    double total = 0.0;
    for (std::size_t b = 0; b < kBases; ++b) {
      Basis w;
      w.direction.resize(dim);
      double norm = 0.0;
      for (std::size_t q = 0; q < dim; ++q) {
        w.direction[q] = seq.normal();
        norm += w.direction[q] * w.direction[q];
      }
      norm = std::sqrt(norm);
      if (norm == 0.0) norm = 1.0;
      for (auto& v : w.direction) v /= norm;
      w.frequency = 0.5 + seq.unit();            // 0.5 to 1.5 cycles across the cube
      w.phase = 2.0 * std::numbers::pi * seq.unit();
      w.amplitude = 1.0 / static_cast<double>(1 + b);
      total += w.amplitude;
      bases_.push_back(std::move(w));
    }
    scale_ = 1.0 / total;
  }

  double operator()(const std::vector<double>& x) const {
    double v = 0.0;
    for (const auto& w : bases_) {
      double proj = 0.0;
      for (std::size_t q = 0; q < x.size(); ++q) proj += w.direction[q] * (x[q] - 0.5);
      v += w.amplitude * std::cos(2.0 * std::numbers::pi * w.frequency * proj + w.phase);
    }
    return v * scale_;
  }

 private:
  static constexpr std::size_t kBases = 6;
  struct Basis {
    std::vector<double> direction;
    double frequency = 1.0;
    double phase = 0.0;
    double amplitude = 1.0;
  };
  std::vector<Basis> bases_;
  double scale_ = 1.0;
};

/// Surface values mapped into the AUC-like range [0.5, 1].
inline std::vector<double> score_vector(const Surface& f,
                                        const std::vector<std::vector<double>>& grid_points) {
  std::vector<double> out(grid_points.size());
  for (std::size_t c = 0; c < grid_points.size(); ++c) out[c] = 0.75 + 0.25 * f(grid_points[c]);
  return out;
}

}  // namespace detail

/// Deterministic in the seed. Task rows are
///   similarity * shared + (1 - similarity) * own + N(0, noise_sd),
/// clipped to [0.5, 1].
inline SynthCorpus generate(const SynthSpec& spec) {
  spec.validate();
  const auto root = rng::Stream::root(spec.seed).sub("synth");

  grid::HyperparamSpace space = grid::default_space(root.sub("grid").bits(0), spec.n_configs);
  auto configs = grid::sample_grid(space);
  const auto encoded = grid::encode_grid(configs, space);
  const std::size_t dim = encoded.empty() ? 0 : encoded[0].size();

  const auto shared = detail::score_vector(detail::Surface(root.sub("shared"), dim), encoded);

  std::vector<corpus::TaskMeta> tasks(spec.n_tasks);
  std::vector<double> scores(spec.n_tasks * spec.n_configs);
  for (std::size_t i = 0; i < spec.n_tasks; ++i) {
    const std::size_t target_i = i % spec.n_targets;
    const std::size_t subset_i = (i / spec.n_targets) % spec.subsets.size();
    const std::size_t tier_i = (i / (spec.n_targets * spec.subsets.size())) % spec.feature_tiers.size();

    corpus::TaskMeta& t = tasks[i];
    t.target = "target" + grid::detail::padded_index(target_i, spec.n_targets);
    t.subset_id = spec.subsets[subset_i];
    t.n_features = spec.feature_tiers[tier_i];
    t.source = corpus::Source::consolidated;
    t.task_id = "t" + grid::detail::padded_index(i, spec.n_tasks) + "_" + t.target + "_" + t.subset_id;

    const auto own = detail::score_vector(detail::Surface(root.sub("task").sub(i), dim), encoded);
    const auto noise = root.sub("noise").sub(i);
    for (std::size_t c = 0; c < spec.n_configs; ++c) {
      double v = spec.similarity * shared[c] + (1.0 - spec.similarity) * own[c];
      if (spec.noise_sd > 0.0) v += spec.noise_sd * noise.normal(c);
      scores[i * spec.n_configs + c] = std::clamp(v, 0.5, 1.0);
    }
  }

  std::vector<std::string> config_ids;
  config_ids.reserve(configs.size());
  for (const auto& c : configs) config_ids.push_back(c.config_id);

  return SynthCorpus{corpus::EvalMatrix(std::move(tasks), std::move(config_ids), std::move(scores)),
                     std::move(space), std::move(configs)};
}

}  // namespace hpfolio::synth
