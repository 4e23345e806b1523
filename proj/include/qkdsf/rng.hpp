#pragma once

// Deterministic random sampling used by the simulator and the bootstrap.
// All distributions are hand-evaluated from mt19937_64 output so a given
// seed reproduces the same stream on any platform; substream(k) derives
// independent generators from one master seed via splitmix64.

#include <cmath>
#include <cstdint>
#include <random>

namespace qkdsf {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng substream(std::uint64_t master_seed, std::uint64_t index) {
    std::uint64_t s = master_seed;
    std::uint64_t a = splitmix64(s);
    s ^= index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
    std::uint64_t b = splitmix64(s);
    return Rng(a ^ (b + index));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in (0, 1]; safe for log().
  double uniform_pos() { return 1.0 - uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n).
  std::uint32_t uniform_index(std::uint32_t n) {
    return static_cast<std::uint32_t>(engine_() % n);
  }

  /// Exponential inter-arrival time for a process of the given rate.
  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  double normal(double mean, double sigma) {
    if (have_cached_) {
      have_cached_ = false;
      return mean + sigma * cached_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return mean + sigma * r * std::cos(a);
  }

  /// Poisson count; exact (Knuth) for small means, Gaussian approximation
  /// above 256 where the relative error is far below sampling noise.
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 256.0) {
      const double limit = std::exp(-mean);
      double p = 1.0;
      std::uint64_t k = 0;
      do {
        ++k;
        p *= uniform_pos();
      } while (p > limit);
      return k - 1;
    }
    const double v = normal(mean, std::sqrt(mean));
    return v <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(v));
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace qkdsf
