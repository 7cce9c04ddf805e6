#pragma once

// Counter-based random numbers: every draw is a pure function of its key, so
// two-sided and out-of-order time indexing is reproducible.

#include <cstdint>

namespace khj::rng {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// 64 random bits keyed by (seed, stream, a, b).
constexpr std::uint64_t hash_key(std::uint64_t seed, std::uint64_t stream, std::int64_t a,
                                 std::int64_t b) {
  std::uint64_t h = mix64(seed ^ 0x5851f42d4c957f2dULL);
  h = mix64(h ^ (stream * 0xd1b54a32d192ed03ULL));
  h = mix64(h ^ static_cast<std::uint64_t>(a));
  h = mix64(h ^ (static_cast<std::uint64_t>(b) * 0xa0761d6478bd642fULL));
  return h;
}

/// Uniform in the open interval (0, 1) from the top 52 bits of `bits`.
constexpr double open_unit(std::uint64_t bits) {
  // 52 bits so that (m + 1/2) 2^-52 stays exactly representable below 1.
  const double m = static_cast<double>(bits >> 12);
  return (m + 0.5) * (1.0 / 4503599627370496.0);
}

/// Standard normal quantile (Wichura, AS241 PPND16), relative accuracy ~1e-16.
double normal_quantile(double p);

/// Keyed stream of uniforms/normals for auxiliary randomness (initial
/// conditions, trial parameters). Sequential draws are keyed by a counter.
class KeyedStream {
 public:
  KeyedStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  double uniform() { return open_unit(hash_key(seed_, stream_, counter_++, 0)); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_quantile(uniform()); }
  std::int64_t integer(std::int64_t lo, std::int64_t hi);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::int64_t counter_ = 0;
};

}  // namespace khj::rng
