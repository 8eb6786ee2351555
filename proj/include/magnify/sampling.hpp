#pragma once

#include "magnify/types.hpp"

#include <cstdint>
#include <vector>

namespace magnify {

/// Deterministic 64-bit generator (splitmix64). Used instead of <random>
/// distributions, whose output is implementation-defined.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

/// Scrambled Halton points on the unit sphere S^{n-1}.
///
/// The i-th point maps the i-th Halton vector (bases = first n primes, shifted
/// modulo 1 by a seed-dependent Cranley-Patterson rotation) through the normal
/// quantile and normalizes. The sequence is a pure function of (n, count, seed).
std::vector<Vector> sphere_points(int n, int count, std::uint64_t seed);

/// Like sphere_points, but returned as antipodal pairs u, -u (count rounded up
/// to even). Symmetric direction sets cancel even-order terms in odd fits.
/// Seed derived from a base seed and a positive scale. Scales equal to about
/// nine significant digits map to the same seed, so a value computed at a scale
/// does not depend on how a ladder containing it was constructed.
std::uint64_t scale_seed(std::uint64_t seed, double scale);

std::vector<Vector> antipodal_sphere_points(int n, int count, std::uint64_t seed);

/// One point uniformly distributed in the closed ball.
Vector ball_point(SplitMix64& rng, const Vector& center, double radius);

/// Points uniformly distributed in the closed ball of the given radius.
std::vector<Vector> ball_points(const Vector& center, double radius, int count,
                                std::uint64_t seed);

}  // namespace magnify
