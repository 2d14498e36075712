#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace episim {

// SplitMix64 step; used for seed derivation only.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic seed for a named substream. Every replica, probe and
// per-site stream derives its seed this way, so results depend only on
// (master_seed, ids...) and never on scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = master;
  (void)splitmix64(s);
  s ^= a * 0xD6E8FEB86659FD93ULL;
  (void)splitmix64(s);
  s ^= b * 0xCA5A826395121157ULL;
  (void)splitmix64(s);
  s ^= c * 0xA24BAED4963EE407ULL;
  return splitmix64(s);
}

// mt19937_64 wrapper with hand-rolled variate generation. The standard
// distributions are implementation-defined; these are not, so identical
// seeds give identical streams on any conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0x853C49E6748FEA9BULL) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1]; safe as a log argument.
  double uniform01_open_left() { return 1.0 - uniform01(); }

  double exponential(double rate) {
    return -std::log(uniform01_open_left()) / rate;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Unbiased uniform integer in [0, n), rejection sampled.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

  // Exact Poisson sampling. Knuth's product method under a chunk split
  // (Poisson(a+b) = Poisson(a) + Poisson(b)) to keep the product away
  // from the underflow edge at large means.
  std::uint64_t poisson(double mean) {
    std::uint64_t total = 0;
    while (mean > 32.0) {
      total += poisson_knuth(32.0);
      mean -= 32.0;
    }
    return total + poisson_knuth(mean);
  }

 private:
  std::uint64_t poisson_knuth(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double product = uniform01_open_left();
    while (product > limit) {
      ++k;
      product *= uniform01_open_left();
    }
    return k;
  }

  std::mt19937_64 engine_;
};

}  // namespace episim
