#pragma once

// Deterministic counter-based random streams.
//
// Every random quantity is addressed as (seed, stream labels..., counter), so
// draws never depend on call order: adding a hyperparameter or a task does not
// perturb any other column. The mixer is the SplitMix64 finalizer; the
// generator id below is persisted in grid files so sampled grids stay
// reproducible across releases.

#include <cstdint>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string_view>
#include <vector>

namespace hpfolio::rng {

inline constexpr const char* kGeneratorId = "hpfolio.splitmix.v1";

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

class Sequence;

class Stream {
 public:
  static Stream root(std::uint64_t seed) {
    return Stream(mix64(seed ^ fnv1a64(kGeneratorId)));
  }

  Stream sub(std::string_view label) const { return Stream(mix64(key_ ^ fnv1a64(label))); }
  Stream sub(std::uint64_t index) const {
    return Stream(mix64(key_ ^ mix64(index + 0x9E3779B97F4A7C15ULL)));
  }

  std::uint64_t key() const { return key_; }

  std::uint64_t bits(std::uint64_t counter) const {
    return mix64(key_ + 0x9E3779B97F4A7C15ULL * (counter + 1));
  }

  /// Uniform on [0, 1).
  double unit(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  /// Inclusive integer bounds: floor of uniform on [lo, hi + 1).
  std::int64_t uniform_int(std::uint64_t counter, std::int64_t lo, std::int64_t hi) const {
    const auto v = lo + static_cast<std::int64_t>(unit(counter) * static_cast<double>(hi - lo + 1));
    return v > hi ? hi : v;
  }

  std::size_t index(std::uint64_t counter, std::size_t bound) const {
    const auto v = static_cast<std::size_t>(unit(counter) * static_cast<double>(bound));
    return v >= bound ? bound - 1 : v;
  }

  /// Standard normal via Box-Muller; consumes counters 2c and 2c+1.
  double normal(std::uint64_t counter) const {
    const double u1 = 1.0 - unit(2 * counter);      // (0, 1]
    const double u2 = unit(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Sequence sequence() const;

 private:
  explicit constexpr Stream(std::uint64_t key) : key_(key) {}
  std::uint64_t key_;
};

/// Stateful cursor over a stream for sequential draws (shuffles etc.).
class Sequence {
 public:
  explicit Sequence(Stream s) : s_(s) {}
  std::uint64_t bits() { return s_.bits(n_++); }
  double unit() { return s_.unit(n_++); }
  std::size_t index(std::size_t bound) { return s_.index(n_++, bound); }
  double normal() { return s_.normal(n_++ + kNormalOffset); }

 private:
  // normal() consumes two raw counters; keep it on a disjoint counter range
  // so mixing unit() and normal() draws cannot collide.
  static constexpr std::uint64_t kNormalOffset = 1ULL << 62;
  Stream s_;
  std::uint64_t n_ = 0;
};

inline Sequence Stream::sequence() const { return Sequence(*this); }

/// First k entries of a random permutation of {0, ..., n-1} (partial Fisher-Yates).
inline std::vector<std::size_t> sample_distinct(Sequence& seq, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  const std::size_t m = k < n ? k : n;
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t j = i + seq.index(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  return idx;
}

}  // namespace hpfolio::rng
