#pragma once

// Deterministic randomness helpers. std::mt19937_64 is specified bit-exactly,
// but the std distributions are not, so sampling is done by hand here to keep
// results reproducible across standard libraries.

#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace mann {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1) with 53-bit resolution
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n), n > 0; rejection sampling keeps it unbiased
  std::size_t below(std::size_t n) {
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x > limit);
    return static_cast<std::size_t>(x % n);
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    shuffle(p);
    return p;
  }

  // Random permutation, re-drawn up to 10 times while it has a fixed point.
  // After 10 draws the last one is accepted even if some index stays put.
  std::vector<std::size_t> derangement_preferring_permutation(std::size_t n) {
    std::vector<std::size_t> p;
    for (int attempt = 0; attempt < 10; ++attempt) {
      p = permutation(n);
      bool fixed_point = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (p[i] == i) {
          fixed_point = true;
          break;
        }
      }
      if (!fixed_point) return p;
    }
    return p;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mann
