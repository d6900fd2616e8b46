#pragma once

// Deterministic randomness utilities. Every stochastic component of the
// engine draws from an Rng seeded through derive_seed so that runs are
// bit-reproducible across platforms and independent of evaluation order.
// std::mt19937_64 output is fully specified by the standard; the library
// distributions are not, so uniform/int/categorical are implemented here.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace zvp {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Hash-chains a master seed with a path of stream identifiers, giving
// decorrelated per-component seeds (cursor, rollout slot, eval, ...).
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(master);
  for (std::uint64_t p : path) {
    s = splitmix64(s ^ splitmix64(p));
  }
  return s;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [lo, hi], inclusive. Rejection sampling keeps the
  // result unbiased and platform-independent.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(engine_());  // full range
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return lo + static_cast<std::int64_t>(x % span);
  }

  // Inverse-CDF draw from a probability vector. Zero-probability entries are
  // never returned; the last positive entry absorbs rounding slack.
  std::size_t categorical(std::span<const double> probs) {
    const double u = uniform();
    double cum = 0.0;
    std::size_t last_positive = 0;
    bool seen = false;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      last_positive = i;
      seen = true;
      cum += probs[i];
      if (u < cum) return i;
    }
    (void)seen;
    return last_positive;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(
          uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Stream tags for derive_seed paths. Keeping them in one place avoids
// accidental collisions between components.
namespace seed_stream {
inline constexpr std::uint64_t cursor = 1;
inline constexpr std::uint64_t rollout = 2;
inline constexpr std::uint64_t minibatch = 3;
inline constexpr std::uint64_t eval = 4;
inline constexpr std::uint64_t skip_filter = 5;
inline constexpr std::uint64_t policy_init = 6;
inline constexpr std::uint64_t dataset = 7;
inline constexpr std::uint64_t eval_dataset = 8;
}  // namespace seed_stream

}  // namespace zvp
