#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace fedmdp {

// Every stochastic construction draws from a substream keyed by
// (seed, purpose tag, index). The key is hashed with FNV-1a + splitmix64 and
// seeds a std::mt19937_64, whose output sequence is fixed by the standard.
// Variates are derived from raw 64-bit outputs directly so results do not
// depend on the standard library's distribution implementations.

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace detail

inline std::uint64_t substream_key(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
  std::uint64_t k = detail::splitmix64(seed);
  k = detail::splitmix64(k ^ detail::fnv1a(tag));
  return detail::splitmix64(k ^ detail::splitmix64(index + 0x632BE59BD9B4E019ULL));
}

class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0)
      : engine_(substream_key(seed, tag, index)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli_half() { return (engine_() >> 63) != 0; }

  /// Exp(1) variate; 1 - U lies in (0, 1] so the log is finite.
  double exponential() { return -std::log1p(-uniform()); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fedmdp
