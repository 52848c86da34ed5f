#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace likspec {

// Seeded random source whose derived draws do not depend on the standard
// library's distribution implementations, so seeded outputs are identical
// across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n); n > 0. Rejection sampling, no modulo bias.
  std::uint64_t index(std::uint64_t n);

  // Standard normal via Box-Muller.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a; stable across platforms, used to derive per-document seeds.
std::uint64_t stable_hash(std::string_view s);

std::uint64_t mix_seed(std::uint64_t seed, std::string_view key);

}  // namespace likspec
