#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>

namespace varbandit {

// What a random substream is used for. Part of the substream key so that
// e.g. the policy's sampling never shifts the environment's reward draws.
enum class StreamPurpose : std::uint64_t {
  kContext = 1,
  kPolicy = 2,
  kReward = 3,
  kVariance = 4,
  kInstance = 5,
  kAuxiliary = 6,
};

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based substream key:
//   key = mix64(mix64(mix64(mix64(seed) ^ run) ^ round) ^ purpose)
// Every (seed, run, round, purpose) cell owns an independent generator, so a
// transcript depends only on its cell and never on scheduling or thread count.
constexpr std::uint64_t derive_stream_key(std::uint64_t seed, std::uint64_t run,
                                          std::uint64_t round,
                                          StreamPurpose purpose) {
  std::uint64_t k = mix64(seed);
  k = mix64(k ^ run);
  k = mix64(k ^ round);
  return mix64(k ^ static_cast<std::uint64_t>(purpose));
}

// SplitMix64 generator. Satisfies UniformRandomBitGenerator, but the
// distributions below are hand-rolled so results are identical across
// standard library implementations.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t state = 0) : state_(state) {}

  static Rng for_stream(std::uint64_t seed, std::uint64_t run,
                        std::uint64_t round, StreamPurpose purpose) {
    return Rng(derive_stream_key(seed, run, round, purpose));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling, unbiased.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t v;
    do {
      v = (*this)();
    } while (v >= limit);
    return v % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller; the sine branch is discarded to keep the stream stateless.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Draws an index from a probability vector. Mass that rounding leaves over
  // falls on the last index with positive probability.
  std::size_t categorical(std::span<const double> probs) {
    const double u = uniform();
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      last_positive = i;
      acc += probs[i];
      if (u < acc) return i;
    }
    return last_positive;
  }

 private:
  std::uint64_t state_;
};

}  // namespace varbandit
