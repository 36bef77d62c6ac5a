#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace losp {

/// SplitMix64 finalizer: a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based hash of (key, counter). Used wherever a random value must be
/// addressable (per-site occupation marks, per-cell point streams, per-task
/// substreams) so results do not depend on evaluation order.
constexpr std::uint64_t hash2(std::uint64_t key, std::uint64_t counter) {
  return mix64(mix64(key + 0x9e3779b97f4a7c15ULL) ^ (counter * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

/// Maps 64 random bits to [0, 1) with 53-bit resolution.
constexpr double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Independent stream seed for task `index` of a run seeded by `master`.
constexpr std::uint64_t substream(std::uint64_t master, std::uint64_t index) {
  return hash2(master, index);
}

/// SplitMix64 generator; cheap to construct, so one per replication is fine.
/// Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform on [0, 1).
  double uniform() { return to_unit((*this)()); }
  /// Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

 private:
  std::uint64_t state_;
};

/// Number of failures before the first success when each trial fails with
/// probability `fail_prob`, drawn by inversion.
template <typename Rng>
std::uint64_t geometric_failures(Rng& rng, double fail_prob) {
  if (fail_prob <= 0.0) return 0;
  if (fail_prob >= 1.0) return std::numeric_limits<std::uint64_t>::max();
  const double u = rng.uniform_pos();
  const double k = std::floor(std::log(u) / std::log(fail_prob));
  if (k >= 9.0e18) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(k);
}

/// Exponential(rate) conditioned to be at most `cap`, by inversion.
template <typename Rng>
double truncated_exponential(Rng& rng, double rate, double cap) {
  const double mass = -std::expm1(-rate * cap);
  return -std::log1p(-rng.uniform() * mass) / rate;
}

}  // namespace losp
