#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace riccilab {

/// Counter-based generator: draw k of stream (seed, key) is a pure function
/// of (seed, key, k), so samples do not depend on evaluation order or thread.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t key) : base_(mix(seed ^ mix(key + 0x9e3779b97f4a7c15ULL))) {}
  CounterRng(std::uint64_t seed, std::string_view key) : CounterRng(seed, hash(key)) {}

  std::uint64_t next_u64() { return mix(base_ + 0x9e3779b97f4a7c15ULL * ++counter_); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
  int integer(int lo, int hi) { return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1)); }
  /// Independent child stream.
  CounterRng fork(std::uint64_t key) { return CounterRng(next_u64(), key); }

  static std::uint64_t hash(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    return h;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

}  // namespace riccilab
