#pragma once

#include <cmath>
#include <cstdint>

namespace nowcaster {

// Deterministic seeded stream. All randomness in the library flows through
// this type so that results are reproducible bit-for-bit across runs and
// independent of thread scheduling: parallel work items derive their own
// sub-streams from (seed, domain, index) instead of sharing one generator.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {
    // warm up so that small seeds do not produce correlated first draws
    next_u64();
    next_u64();
  }

  uint64_t next_u64() {
    // splitmix64
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, n)
  uint64_t next_below(uint64_t n) {
    // rejection sampling to avoid modulo bias
    const uint64_t limit = n * (~0ULL / n);
    uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  // uniform in [0, 1) with 53-bit resolution
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double exponential(double lambda) { return -std::log(1.0 - next_double()) / lambda; }

  double normal() {
    // Marsaglia polar method; the spare is cached
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_double() - 1.0;
      v = 2.0 * next_double() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double log_normal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

  // unbiased Fisher-Yates shuffle
  template <typename Seq>
  void shuffle(Seq& seq) {
    for (size_t i = seq.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(next_below(i));
      std::swap(seq[i - 1], seq[j]);
    }
  }

 private:
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent sub-seed for a (domain, index) work item.
inline uint64_t derive_seed(uint64_t master, uint64_t domain, uint64_t index) {
  Rng mix(master ^ (domain * 0xd6e8feb86659fd93ULL) ^ (index * 0xa0761d6478bd642fULL));
  return mix.next_u64();
}

namespace seed_domain {
constexpr uint64_t kBootstrap = 1;
constexpr uint64_t kLambdaResample = 2;
constexpr uint64_t kTree = 3;
constexpr uint64_t kSynthBin = 4;
constexpr uint64_t kPermutation = 5;
constexpr uint64_t kSwap = 6;
}  // namespace seed_domain

}  // namespace nowcaster
