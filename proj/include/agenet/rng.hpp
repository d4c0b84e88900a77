#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace agenet {

/// splitmix64 finalizer. Used only to derive seeds, never as the main
/// generator.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Splittable seed derivation: child streams are indexed by a salt.
/// The scheme is documented in run manifests so that any stream can be
/// reconstructed: derive(salt) = mix64(mix64(root ^ GOLDEN*(salt+1))).
struct SeedSequence {
  std::uint64_t root = 0;

  std::uint64_t derive(std::uint64_t salt) const {
    return mix64(mix64(root ^ (0x9e3779b97f4a7c15ull * (salt + 1))));
  }
  SeedSequence child(std::uint64_t salt) const { return SeedSequence{derive(salt)}; }
};

/// One deterministic random stream. Uniforms are built from raw 64-bit
/// output, not std distributions, so byte-level reproducibility does not
/// depend on the standard library implementation.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  /// Exponential waiting time with the given rate (> 0).
  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  /// Uniform on [lo, hi].
  double uniform_on(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace agenet
