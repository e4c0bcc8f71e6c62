#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace roamsim {

// splitmix64 finalizer, used to derive independent subsystem streams from one root seed.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_name(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seeded random stream. The mapping from raw bits to doubles/integers is
/// fixed here rather than delegated to <random> distributions, whose output
/// differs between standard library implementations.
class Rng {
  __extension__ using u128 = unsigned __int128;

 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(mix64(seed)) {}

  /// Stream for a named subsystem ("placement", "mobility", ...), so adding
  /// draws in one subsystem never shifts another's sequence.
  static Rng derive(std::uint64_t root, std::string_view subsystem, std::uint64_t index = 0) {
    return Rng(mix64(root ^ hash_name(subsystem)) ^ mix64(index + 0x51ed27ULL));
  }

  std::uint64_t bits() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    // Lemire's nearly-divisionless rejection.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t x = engine_();
      const u128 m = static_cast<u128>(x) * n;
      if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Number of trials up to and including the first success (support 1, 2, ...).
  std::uint64_t geometric(double p) {
    if (p >= 1.0) return 1;
    const double draws = std::floor(std::log(uniform_open0()) / std::log1p(-p));
    if (draws >= 9.0e18) return static_cast<std::uint64_t>(9.0e18);
    return 1 + static_cast<std::uint64_t>(draws);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace roamsim
